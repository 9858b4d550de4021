"""Command-line interface: ``mhdlab {list,sample,verify,flow,circulate}``.

Exit codes: 0 success, 1 usage or parameter error, 2 verification failure.
Data files use ``%.17g`` floats and fixed column order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diffcalc as dc
from . import lagrangian as lg
from . import mhdcheck as mc
from . import symmetry as sy
from .core import PARAM_SPECS, ConstraintError, MhdConfig, MhdLabError, family_group
from .reduced import REDUCED_IDS, build_family, family_variants
from .solutions import CLOSED_FORM_IDS, family_metadata

ALL_IDS = tuple(sorted(CLOSED_FORM_IDS + REDUCED_IDS, key=lambda s: (int(s[1:].split("/")[0]), s)))
AXES = ("t", "x", "y", "z")
SAMPLE_COLUMNS = ("t", "x", "y", "z", "rho", "p", "v1", "v2", "v3", "B1", "B2", "B3", "J", "F_m", "omega")

# suspected term for reference forms that fail the residual check
SUSPECT_TERMS = {
    "G2/gamma=3/2": "v3: A_o multiplies the log term instead of the W term; R(t) is exp of half the required exponent",
    "G2/gamma=2": "v3: A_o multiplies the log term instead of the W term",
    "G2/generic": "v3: A_o placement; R(t) lacks the factor 4 alpha2^2 A_o and must be an exponent",
    "G3/case1": "B amplitude exponent (alpha2-1)/alpha1 should be alpha2/alpha1 - 1 (inherited by the reduced equation)",
    "G3/case4": "B amplitude exponent (alpha2-1)/alpha1 should be alpha2/alpha1 - 1 (inherited by the reduced equation)",
    "G3/case5": "B amplitude exponent (alpha2-1)/alpha1 should be alpha2/alpha1 - 1 (inherited by the reduced equation)",
    "G3/general": "rho exponent 2(alpha2/alpha1 - 1) should be 2(alpha2/alpha1 - 2); B exponent (alpha2-1)/alpha1 "
                  "should be alpha2/alpha1 - 1",
    "G5": "v_z exponent alpha1 phi - alpha2 theta is not constant on magnetic surfaces phi - theta = const",
    "G6": "B_z linear in (phi - theta2) should be exponential; v_z exponent should be alpha1 (phi - theta2)",
    "G6/alpha2=0": "radial power of v_z alpha1/(1+alpha1^2) should be alpha1^2/(1+alpha1^2)",
    "G9": "B carries t^(2 alpha) where t^alpha is required",
}


class UsageError(MhdLabError):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MHDLAB_THREADS", "1")))
    except ValueError:
        return 1


def _fmt(v) -> str:
    return "%.17g" % float(v)


# --- run specification -----------------------------------------------------------------------


@dataclass
class RunSpec:
    command: str
    family: str | None = None
    params: dict = field(default_factory=dict)
    variant: str | None = None
    grid: dict = field(default_factory=dict)     # axis -> (lo, hi, n)
    fixed: dict = field(default_factory=dict)    # axis -> value
    tol: float = 1e-8
    ode_tol: float = 1e-10
    out: str | None = None
    fmt: str = "csv"


def _kv(text: str, what: str) -> tuple[str, str]:
    if "=" not in text:
        raise UsageError(f"{what} expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{what}: {text!r} is not a number") from None


def parse_params(items) -> dict:
    out = {}
    for it in items or ():
        k, v = _kv(it, "--param")
        out[k] = _float(v, f"--param {k}")
    return out


def parse_grid(items) -> dict:
    out = {}
    for it in items or ():
        ax, rng = _kv(it, "--grid")
        if ax not in AXES:
            raise UsageError(f"--grid axis must be one of t, x, y, z (got {ax!r})")
        parts = rng.split(":")
        if len(parts) != 3:
            raise UsageError(f"--grid {ax} expects min:max:n, got {rng!r}")
        lo, hi = _float(parts[0], "--grid"), _float(parts[1], "--grid")
        try:
            n = int(parts[2])
        except ValueError:
            raise UsageError(f"--grid count must be an integer, got {parts[2]!r}") from None
        if n < 1:
            raise UsageError("--grid counts must be >= 1")
        out[ax] = (lo, hi, n)
    return out


def parse_fix(items) -> dict:
    out = {}
    for it in items or ():
        ax, v = _kv(it, "--fix")
        if ax not in AXES:
            raise UsageError(f"--fix axis must be one of t, x, y, z (got {ax!r})")
        out[ax] = _float(v, "--fix")
    return out


def parse_loop(text: str | None) -> dict:
    spec = {"center": (0.0, 0.0, 0.0), "radius": 0.1, "normal": (0.0, 0.0, 1.0), "n": 64}
    if not text:
        return spec
    for key, val in re.findall(r"(\w+)=([^=]+?)(?=,\s*\w+=|$)", text):
        if key in ("center", "normal"):
            vec = tuple(_float(c, f"--loop {key}") for c in val.split(","))
            if len(vec) != 3:
                raise UsageError(f"--loop {key} needs three components")
            spec[key] = vec
        elif key == "radius":
            spec[key] = _float(val, "--loop radius")
        elif key == "n":
            spec[key] = int(_float(val, "--loop n"))
        else:
            raise UsageError(f"unknown --loop key {key!r}")
    return spec


def _grid_points(family, spec: RunSpec):
    axes = []
    for i, ax in enumerate(AXES):
        if ax in spec.grid:
            lo, hi, n = spec.grid[ax]
            axes.append(np.linspace(lo, hi, n))
        elif ax in spec.fixed:
            axes.append(np.array([spec.fixed[ax]]))
        else:
            lo, hi = family.box[i]
            axes.append(np.array([0.5 * (lo + hi)]))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = [m.ravel() for m in mesh]
    keep = family.domain(*pts)
    dropped = int((~keep).sum())
    if dropped:
        print(f"warning: {dropped} grid point(s) outside the {family.id} domain were skipped: "
              f"{'; '.join(family.violated(*pts))}", file=sys.stderr)
    return tuple(p[keep] for p in pts)


def _family(spec: RunSpec):
    if spec.family is None:
        raise UsageError("--family is required")
    if spec.family not in PARAM_SPECS:
        raise UsageError(f"unknown family {spec.family!r}; run `mhdlab list`")
    return build_family(spec.family, spec.params, spec.variant, MhdConfig(residual_tol=spec.tol, ode_tol=spec.ode_tol),
                        tol=spec.ode_tol)


def _sample_rows(family, pts):
    if not len(pts[0]):
        return np.zeros((0, len(SAMPLE_COLUMNS)))
    chunks = np.array_split(np.arange(len(pts[0])), min(_threads(), len(pts[0])))

    def work(idx):
        sub = tuple(p[idx] for p in pts)
        st = family.evaluate(*sub)
        fj = family.jet(*sub)
        J = np.stack(dc.curl(fj.B), axis=-1)
        B = np.stack(st.B, axis=-1)
        Fm = np.cross(J, B)
        w = np.stack(dc.curl(fj.v), axis=-1)
        cols = [*sub, st.rho, st.p, *st.v, *st.B, np.linalg.norm(J, axis=-1), np.linalg.norm(Fm, axis=-1),
                np.linalg.norm(w, axis=-1)]
        return np.stack([np.broadcast_to(c, sub[0].shape) for c in cols], axis=1)

    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        return np.concatenate(list(ex.map(work, [c for c in chunks if len(c)])))


def _write_table(rows, columns, spec: RunSpec):
    if spec.fmt == "json":
        text = json.dumps({"columns": list(columns), "rows": [[float(v) for v in r] for r in rows]}) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
    _emit(text, spec.out)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands --------------------------------------------------------------------------------


def family_table() -> list[dict]:
    rows = []
    for fid in ALL_IDS:
        ps = PARAM_SPECS[fid]
        md = family_metadata(fid)
        rows.append({
            "id": fid,
            "group": family_group(fid),
            "kind": "reduced ODE" if fid in REDUCED_IDS else "closed form",
            "params": {k: v for k, v in ps.defaults.items()},
            "fixed": dict(ps.fixed),
            "constraints": [r[0] for r in ps.rules],
            "variants": list(family_variants(fid)),
            "metadata": {
                "b_configuration": md.b_configuration, "stationary": md.stationary,
                "compressible": md.compressible, "wave": md.wave, "force_character": md.force_character,
                "circulation_conserved": md.circulation_conserved,
            },
        })
    return rows


def cmd_list(spec: RunSpec) -> int:
    rows = family_table()
    if spec.fmt == "json":
        _emit(json.dumps(rows, indent=1) + "\n", spec.out)
        return 0
    groups = sorted({r["group"] for r in rows}, key=lambda g: int(g[1:]))
    lines = [f"{len(groups)} family groups, {len(rows)} concrete families", ""]
    for r in rows:
        md = r["metadata"]
        lines.append(f"{r['id']:<14} {r['kind']:<12} B:{md['b_configuration']:<12} "
                     f"{'stationary' if md['stationary'] else 'unsteady':<10} "
                     f"{'compressible' if md['compressible'] else 'incompressible':<14} "
                     f"circulation {'conserved' if md['circulation_conserved'] else 'not conserved'}")
        lines.append("    params: " + ", ".join(f"{k}={float(v)!r}" for k, v in r["params"].items()))
        if r["fixed"]:
            lines.append("    fixed: " + ", ".join(f"{k}={float(v)!r}" for k, v in r["fixed"].items()))
        if r["constraints"]:
            lines.append("    constraints: " + "; ".join(r["constraints"]))
        lines.append("    variants: " + ", ".join(r["variants"]))
    _emit("\n".join(lines) + "\n", spec.out)
    return 0


def cmd_sample(spec: RunSpec) -> int:
    fam = _family(spec)
    rows = _sample_rows(fam, _grid_points(fam, spec))
    _write_table(rows, SAMPLE_COLUMNS, spec)
    return 0


def verify_one(family_id: str, variant: str, params: dict, tol: float, n: int, seed: int, ode_tol: float) -> dict:
    fam = build_family(family_id, params, variant, MhdConfig(residual_tol=tol, ode_tol=ode_tol), tol=ode_tol)
    pts = fam.sample(n, seed)
    rep = mc.residual(fam, pts)
    summary = rep.to_dict()
    eq = rep.by_equation()
    worst = max(eq, key=eq.get)
    passed = rep.max_abs < tol
    out = {"family": family_id, "variant": variant, "params": {k: float(v) for k, v in fam.params.items()},
           "n_points": n, "seed": seed, "residual_tol": tol, "residual": summary, "pass": passed}
    if not passed:
        out["ledger"] = {"family": family_id, "variant": variant, "max_abs": rep.max_abs, "worst_equation": worst,
                         "suspect": SUSPECT_TERMS.get(family_id, "unidentified")}
    return out


def _merge_ledger(path: str, entries: list[dict]):
    old = []
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            try:
                old = json.load(fh)
            except json.JSONDecodeError:
                raise UsageError(f"ledger file {path!r} is not valid JSON") from None
    merged = {(e["family"], e["variant"]): e for e in old}
    merged.update({(e["family"], e["variant"]): e for e in entries})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([merged[k] for k in sorted(merged)], fh, indent=1)
        fh.write("\n")


def cmd_verify(spec: RunSpec, n: int = 200, seed: int = 0, ledger: str | None = None) -> int:
    ids = ALL_IDS if spec.family in (None, "all") else (spec.family,)
    for fid in ids:
        if fid not in PARAM_SPECS:
            raise UsageError(f"unknown family {fid!r}; run `mhdlab list`")
    jobs = []
    for fid in ids:
        if spec.variant == "all":
            jobs += [(fid, v) for v in family_variants(fid)]
        else:
            jobs.append((fid, spec.variant or "reference"))
    params = spec.params if len(ids) == 1 else {}
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        reports = list(ex.map(lambda j: verify_one(j[0], j[1], params, spec.tol, n, seed, spec.ode_tol), jobs))
    entries = [r["ledger"] for r in reports if "ledger" in r]
    doc = {"residual_tol": spec.tol, "reports": reports, "ledger": entries,
           "passed": sum(r["pass"] for r in reports), "total": len(reports)}
    _emit(json.dumps(doc, indent=1) + "\n", spec.out)
    if ledger:
        _merge_ledger(ledger, entries)
    return 0 if not entries else 2


def cmd_flow(spec: RunSpec, combo: str, eps: float, n: int = 50, seed: int = 0) -> int:
    fam = _family(spec)
    moved = sy.pushforward(fam, combo, eps)
    rows = _sample_rows(moved, _grid_points(moved, spec))
    _write_table(rows, SAMPLE_COLUMNS, spec)
    report = {"family": fam.id, "combo": str(sy.parse_combo(combo)), "eps": eps}
    combos = {str(c): c for c in sy.family_algebra(fam.id, fam.params) + (sy.parse_combo(combo),)}
    for c in combos.values():
        r = sy.invariance_check(fam, c, eps, n, seed)
        report.setdefault("invariance", []).append({"combo": str(c), "deviation": r.deviation, "residual": r.residual})
    print(json.dumps(report), file=sys.stderr if spec.out is None else sys.stdout)
    return 0


def cmd_circulate(spec: RunSpec, loop_text: str | None) -> int:
    fam = _family(spec)
    lp = parse_loop(loop_text)
    if "t" not in spec.grid:
        raise UsageError("circulate needs --grid t=t0:t1:n for the time series")
    t0, t1, nt = spec.grid["t"]
    times = np.linspace(t0, t1, nt)
    n, series = lg.circulation_series(fam, lp["center"], lp["radius"], lp["normal"], t0, times,
                                      target=spec.tol, n0=lp["n"])
    rows = [[t, c.value, c.quadrature_error] for t, c in zip(times, series)]
    _write_table(rows, ("t", "gamma", "quadrature_error"), spec)
    loop = lg.MaterialLoop.circle(lp["center"], lp["radius"], lp["normal"], n, t0)
    table = []
    for t in times:
        rc = lg.circulation_rate_check(fam, loop, float(t))
        table.append({"t": float(t), "dgamma_dt": rc.dgamma_dt, "acceleration_integral": rc.acceleration_integral,
                      "tension_integral": rc.tension_integral, "dt_error": rc.dt_error})
    print(json.dumps({"family": fam.id, "loop_points": n,
                      "circulation_conserved": fam.metadata.circulation_conserved, "rate_check": table}),
          file=sys.stderr if spec.out is None else sys.stdout)
    return 0


# --- argument parsing ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mhdlab", description="Exact ideal-MHD solution families: sample, verify, "
                                 "transform and trace them.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--family", help="family id, e.g. G7 or G3/case2 (see `mhdlab list`)")
        p.add_argument("--param", action="append", default=[], metavar="K=V", help="parameter assignment")
        p.add_argument("--gamma", type=float, help="adiabatic index (where the family leaves it free)")
        p.add_argument("--variant", help="formula variant (reference, corrected, ...; `all` for verify)")
        p.add_argument("--tol", type=float, default=1e-8, help="residual tolerance")
        p.add_argument("--ode-tol", type=float, default=1e-10, help="integration tolerance for profiles")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        if grid:
            p.add_argument("--grid", action="append", default=[], metavar="AXIS=MIN:MAX:N")
            p.add_argument("--fix", action="append", default=[], metavar="AXIS=V")

    p = sub.add_parser("list", help="families, parameters, constraints and metadata")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    common(sub.add_parser("sample", help="field values on a grid"))
    p = sub.add_parser("verify", help="residual verification report (JSON)")
    common(p, grid=False)
    p.add_argument("--n", type=int, default=200, help="random sample points per family")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ledger", help="JSON discrepancy ledger to update")
    p = sub.add_parser("flow", help="transform a family by a generator flow")
    common(p)
    p.add_argument("--combo", required=True, help='generator combination, e.g. "J3+K3+0.5*H"')
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("circulate", help="circulation of an advected circular loop")
    common(p)
    p.add_argument("--loop", help="center=x,y,z,radius=r,normal=a,b,c,n=N")
    return ap


def _spec(args) -> RunSpec:
    params = parse_params(getattr(args, "param", []))
    if getattr(args, "gamma", None) is not None:
        params["gamma"] = args.gamma
    fmt = args.format or ("json" if args.command == "verify" else "csv" if args.command != "list" else "text")
    return RunSpec(args.command, getattr(args, "family", None), params, getattr(args, "variant", None),
                   parse_grid(getattr(args, "grid", [])), parse_fix(getattr(args, "fix", [])),
                   getattr(args, "tol", 1e-8), getattr(args, "ode_tol", 1e-10), args.out, fmt)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        spec = _spec(args)
        if args.command == "list":
            return cmd_list(spec)
        if args.command == "sample":
            return cmd_sample(spec)
        if args.command == "verify":
            return cmd_verify(spec, args.n, args.seed, args.ledger)
        if args.command == "flow":
            return cmd_flow(spec, args.combo, args.eps, args.n, args.seed)
        return cmd_circulate(spec, args.loop)
    except (UsageError, ConstraintError, MhdLabError) as exc:
        print(f"mhdlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
