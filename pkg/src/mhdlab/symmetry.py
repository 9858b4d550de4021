"""Galilean-similitude generators as vector fields on (t, x, u)-space.

Coordinates are ordered ``(t, x1, x2, x3, rho, p, v1, v2, v3, B1, B2, B3)``.
Every generator is affine in these coordinates, and the point part of each
tangent depends on the point only, so flows are affine maps that act
block-diagonally on points and states.  Rotations turn x, v and B together.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import DomainError, MhdLabError, MhdState
from .solutions import Condition, SolutionFamily

GENERATOR_IDS = ("P0", "P1", "P2", "P3", "J1", "J2", "J3", "K1", "K2", "K3", "F", "G", "H")
DIM = 12
_T, _X, _RHO, _P, _V, _B = 0, 1, 4, 5, 6, 9


def _levi(k, i, j):
    return (i - j) * (j - k) * (k - i) / 2


def _affine(gid: str, printed_rotation: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Tangent of one generator as ``M z + c``."""
    M = np.zeros((DIM, DIM))
    c = np.zeros(DIM)
    kind, idx = gid[0], (int(gid[1:]) if len(gid) > 1 else None)
    if kind == "P":
        c[idx] = 1.0
    elif kind == "K":
        M[_X + idx - 1, _T] = 1.0
        c[_V + idx - 1] = 1.0
    elif kind == "J":
        k = idx - 1
        for i in range(3):
            for j in range(3):
                e = _levi(k, i, j)
                if e:
                    M[_X + j, _X + i] = e
                    M[_B + j, _B + i] = e
                    if printed_rotation:
                        # literal v_j d/dv_j with the repeated index
                        M[_V + j, _V + j] += e
                    else:
                        M[_V + j, _V + i] = e
    elif gid == "F":
        M[_T, _T] = 1.0
        for i in range(3):
            M[_X + i, _X + i] = 1.0
    elif gid == "G":
        M[_T, _T] = -1.0
        M[_RHO, _RHO] = -2.0
        for i in range(3):
            M[_V + i, _V + i] = 1.0
    elif gid == "H":
        M[_RHO, _RHO] = 2.0
        M[_P, _P] = 2.0
        for i in range(3):
            M[_B + i, _B + i] = 1.0
    else:
        raise MhdLabError(f"unknown generator {gid!r}")
    return M, c


@dataclass(frozen=True)
class Generator:
    id: str

    def __post_init__(self):
        if self.id not in GENERATOR_IDS:
            raise MhdLabError(f"unknown generator {self.id!r}; expected one of {', '.join(GENERATOR_IDS)}")

    def affine(self):
        return _affine(self.id)


@dataclass(frozen=True)
class GeneratorCombo:
    terms: tuple[tuple[float, Generator], ...]

    def __post_init__(self):
        if not self.terms:
            raise MhdLabError("empty generator combination")
        for a, _ in self.terms:
            if not math.isfinite(a):
                raise MhdLabError("generator coefficients must be finite")

    @classmethod
    def of(cls, *pairs) -> "GeneratorCombo":
        return cls(tuple((float(a), Generator(g)) for a, g in pairs))

    def affine(self):
        M = np.zeros((DIM, DIM))
        c = np.zeros(DIM)
        for a, g in self.terms:
            Mg, cg = g.affine()
            M += a * Mg
            c += a * cg
        return M, c

    @property
    def single(self) -> Generator | None:
        return self.terms[0][1] if len(self.terms) == 1 and self.terms[0][0] == 1.0 else None

    def __str__(self):
        return "+".join(g.id if a == 1.0 else f"{a!r}*{g.id}" for a, g in self.terms)


_TERM = re.compile(r"^\s*(?:([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*\s*)?([A-Za-z]\d?)\s*$")


def parse_combo(text: str) -> GeneratorCombo:
    """Parse ``"J3+K3+0.5*H"``; coefficients may be signed (``"J3+-0.6*H"``)."""
    if isinstance(text, GeneratorCombo):
        return text
    if isinstance(text, Generator):
        return GeneratorCombo(((1.0, text),))
    parts = _split_plus(text)
    terms = []
    for part in parts:
        m = _TERM.match(part)
        if not m:
            raise MhdLabError(f"cannot parse generator term {part!r} in {text!r}")
        coef = float(m.group(1)) if m.group(1) is not None else 1.0
        gid = m.group(2).upper().replace("PO", "P0")
        terms.append((coef, Generator(gid)))
    return GeneratorCombo(tuple(terms))


def _split_plus(text: str) -> list[str]:
    """Split on '+' that are not exponent or coefficient signs."""
    out, cur = [], ""
    for i, ch in enumerate(text):
        prev = text[i - 1] if i else ""
        if ch == "+" and cur.strip() and prev not in "eE+*":
            out.append(cur)
            cur = ""
        else:
            cur += ch
    if not cur.strip():
        raise MhdLabError(f"dangling '+' in {text!r}")
    out.append(cur)
    return out


# --- tangents and flows --------------------------------------------------------------


def _pack(point, state: MhdState | None):
    t, x, y, z = point
    if state is None:
        u = [0.0] * 8
    else:
        u = [state.rho, state.p, *state.v, *state.B]
    return np.array(np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (t, x, y, z, *u))))


def _unpack(zz):
    return tuple(zz[:4]), MhdState(zz[4], zz[5], tuple(zz[6:9]), tuple(zz[9:12]))


def tangent(combo, point, state: MhdState):
    """``(xi, phi)``: the 4 point components and 8 state components."""
    M, c = parse_combo(combo).affine()
    zz = _pack(point, state)
    tz = np.tensordot(M, zz, axes=1) + c.reshape((DIM,) + (1,) * (zz.ndim - 1))
    return tz[:4], tz[4:]


@dataclass(frozen=True)
class AffineFlow:
    """z -> A z + b."""

    A: np.ndarray
    b: np.ndarray

    def apply(self, zz):
        return [sum(self.A[i, j] * zz[j] for j in range(DIM) if self.A[i, j] != 0.0) + self.b[i]
                for i in range(DIM)]

    def apply_points(self, pt):
        return [sum(self.A[i, j] * pt[j] for j in range(4) if self.A[i, j] != 0.0) + self.b[i] for i in range(4)]

    def apply_states(self, u):
        return [sum(self.A[4 + i, 4 + j] * u[j] for j in range(8) if self.A[4 + i, 4 + j] != 0.0) + self.b[4 + i]
                for i in range(8)]

    def then(self, other: "AffineFlow") -> "AffineFlow":
        """``other`` after ``self``."""
        return AffineFlow(other.A @ self.A, other.A @ self.b + other.b)


def _closed_flow(gid: str, eps: float) -> AffineFlow:
    A = np.eye(DIM)
    b = np.zeros(DIM)
    kind = gid[0]
    if kind == "P":
        b[int(gid[1])] = eps
    elif kind == "K":
        i = int(gid[1]) - 1
        A[_X + i, _T] = eps
        b[_V + i] = eps
    elif kind == "J":
        k = int(gid[1]) - 1
        i, j = (k + 1) % 3, (k + 2) % 3
        c, s = math.cos(eps), math.sin(eps)
        for base in (_X, _V, _B):
            A[base + i, base + i] = c
            A[base + i, base + j] = -s
            A[base + j, base + i] = s
            A[base + j, base + j] = c
    elif gid == "F":
        for q in range(4):
            A[q, q] = math.exp(eps)
    elif gid == "G":
        A[_T, _T] = math.exp(-eps)
        A[_RHO, _RHO] = math.exp(-2 * eps)
        for q in range(3):
            A[_V + q, _V + q] = math.exp(eps)
    elif gid == "H":
        A[_RHO, _RHO] = A[_P, _P] = math.exp(2 * eps)
        for q in range(3):
            A[_B + q, _B + q] = math.exp(eps)
    return AffineFlow(A, b)


def flow_map(combo, eps: float) -> AffineFlow:
    """Time-``eps`` map of the combo's vector field.

    Single generators use their closed forms; combinations use the
    exponential of the augmented affine matrix.
    """
    cmb = parse_combo(combo)
    g = cmb.single
    if g is not None:
        return _closed_flow(g.id, eps)
    M, c = cmb.affine()
    aug = np.zeros((DIM + 1, DIM + 1))
    aug[:DIM, :DIM] = M
    aug[:DIM, DIM] = c
    E = expm(eps * aug)
    return AffineFlow(E[:DIM, :DIM], E[:DIM, DIM])


def flow(combo, eps: float, point, state: MhdState | None = None):
    """Image ``(point, state)`` of a point (and state) under the flow."""
    zz = flow_map(combo, eps).apply(list(_pack(point, state)))
    return _unpack(np.array(np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in zz))))


# --- action on solutions -----------------------------------------------------------------


def pushforward(family: SolutionFamily, combo, eps: float) -> SolutionFamily:
    """The transformed family ``u~(x~) = flow(u(flow^{-1}(x~)))``."""
    cmb = parse_combo(combo)
    fwd = flow_map(cmb, eps)
    inv = flow_map(cmb, -eps)

    def back(t, x, y, z):
        return inv.apply_points([t, x, y, z])

    def fields(t, x, y, z):
        st = family.fields(*back(t, x, y, z))
        u = fwd.apply_states([st.rho, st.p, *st.v, *st.B])
        return MhdState(u[0], u[1], tuple(u[2:5]), tuple(u[5:8]))

    conds = tuple(Condition(c.name, (lambda g: lambda t, x, y, z: g(*back(t, x, y, z)))(c.g), c.margin)
                  for c in family.conditions)
    corners = np.array(np.meshgrid(*family.box, indexing="ij")).reshape(4, -1)
    img = np.array(fwd.apply_points(list(corners)))
    box = tuple((float(img[i].min()), float(img[i].max())) for i in range(4))
    return SolutionFamily(f"{family.id}|{cmb}@{eps:g}", family.params, family.gamma, fields, conds, box,
                          family.variant, {"base": family, "combo": str(cmb), "eps": eps})


@dataclass(frozen=True)
class InvarianceResult:
    deviation: float
    residual: float


def invariance_check(family: SolutionFamily, combo, eps: float, n_samples: int = 50,
                     rng=0) -> InvarianceResult:
    """Max field change and max MHD residual of the transformed family.

    Samples lie in the domains of both the family and its image.
    """
    from .mhdcheck import residual

    moved = pushforward(family, combo, eps)
    rng = np.random.default_rng(rng)
    pts = []
    need = n_samples
    for _ in range(200):
        cand = family.sample(max(4 * need, 64), rng)
        keep = moved.domain(*cand, margin=True)
        pts.append(np.array(cand)[:, keep])
        need -= int(keep.sum())
        if need <= 0:
            break
    pts = np.concatenate(pts, axis=1)[:, :n_samples]
    if pts.shape[1] < n_samples:
        raise DomainError(f"{family.id}: inverse flow leaves the domain for eps={eps}")
    a, b = family.evaluate(*pts), moved.evaluate(*pts)
    dev = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
              for x, y in zip([a.rho, a.p, *a.v, *a.B], [b.rho, b.p, *b.v, *b.B]))
    return InvarianceResult(dev, residual(moved, tuple(pts)).max_abs)


def commutator_discrepancy(a, b, eps: float = 0.1, n: int = 20, rng=0) -> float:
    """max |flow_a∘flow_b(z) - flow_b∘flow_a(z)| over random z."""
    fa, fb = flow_map(a, eps), flow_map(b, eps)
    z = np.random.default_rng(rng).uniform(0.2, 2.0, (DIM, n))
    ab = np.array(fa.then(fb).apply(list(z)))
    ba = np.array(fb.then(fa).apply(list(z)))
    return float(np.max(np.abs(ab - ba)))


def group_law_discrepancy(combo, a: float, b: float, n: int = 20, rng=0) -> float:
    """max |flow(a)∘flow(b)(z) - flow(a+b)(z)| over random z."""
    z = np.random.default_rng(rng).uniform(0.2, 2.0, (DIM, n))
    two = np.array(flow_map(combo, b).then(flow_map(combo, a)).apply(list(z)))
    one = np.array(flow_map(combo, a + b).apply(list(z)))
    return float(np.max(np.abs(two - one)))


def printed_rotation_tangent(k: int, point, state: MhdState):
    """J_k with its velocity term read literally (repeated index), for comparison."""
    M, c = _affine(f"J{k}", printed_rotation=True)
    zz = _pack(point, state)
    tz = np.tensordot(M, zz, axes=1) + c.reshape((DIM,) + (1,) * (zz.ndim - 1))
    return tz[:4], tz[4:]


def printed_rotation_flow(k: int, eps: float) -> AffineFlow:
    M, c = _affine(f"J{k}", printed_rotation=True)
    aug = np.zeros((DIM + 1, DIM + 1))
    aug[:DIM, :DIM] = M
    aug[:DIM, DIM] = c
    E = expm(eps * aug)
    return AffineFlow(E[:DIM, :DIM], E[:DIM, DIM])


# --- the subalgebra each family is invariant under ---------------------------------------


def family_algebra(family_id: str, params) -> tuple[GeneratorCombo, ...]:
    p = params
    grp = family_id.split("/")[0].split("|")[0]
    table = {
        "G1": lambda: [((1, "J3"), (1, "K3"), (p["alpha"], "H")), ((1, "P1"),), ((1, "P2"),)],
        "G2": lambda: [((1, "J3"), (1, "K3"), (p["alpha1"], "P3"), (p["alpha2"], "H")), ((1, "K1"),), ((1, "K2"),)],
        "G3": lambda: [((1, "J3"), (1, "P3"), (p["alpha1"], "G"), (p["alpha2"], "H")), ((1, "K1"),), ((1, "K2"),)],
        "G4": lambda: [((1, "F"), (p["alpha1"], "G"), (p["alpha2"], "H")), ((1, "P0"),), ((1, "P3"),)],
        "G5": lambda: [((1, "J3"), (p["alpha1"], "G"), (p["alpha2"], "H")), ((1, "P0"),), ((1, "P3"),)],
        "G6": lambda: [((1, "J3"), (p["alpha1"], "F"), (p["alpha1"], "G"), (p.get("alpha2", 0.0), "H")),
                       ((1, "P0"),), ((1, "P3"),)],
        "G7": lambda: [((1, "J3"), (1, "P3")), ((1, "P1"),), ((1, "P2"),)],
        "G8": lambda: [((1, "F"), (1, "G")), ((1, "K1"), (1, "P2"), (p["alpha"], "P3")), ((1, "P1"), (p["beta"], "P2"))],
        "G9": lambda: [((1, "F"), (1, "K3"), (p["alpha"], "H")), ((1, "P2"),), ((1, "P3"), (p["beta"], "P1"))],
        "G10": lambda: [((1, "G"), (2.0, "H")), ((1, "K1"),), ((1, "K2"),)],
    }
    if grp not in table:
        raise MhdLabError(f"no subalgebra recorded for {family_id!r}")
    return tuple(GeneratorCombo.of(*terms) for terms in table[grp]())
