"""Material points, material loops, circulation and field lines.

Loops are closed curves sampled at equally spaced parameter values; line
integrals use the trapezoid rule in that parameter with tangents from the
discrete Fourier derivative, which is spectrally accurate for smooth loops.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import diffcalc as dc
from .core import DomainError, MhdLabError
from .reduced import ToleranceError, dopri5

MIN_LOOP_POINTS = 16


class DomainExitError(DomainError):
    """A trajectory left the family domain."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


# --- point advection ------------------------------------------------------------------


def _velocity(family, t, pts):
    with np.errstate(all="ignore"):
        st = family.fields(t, pts[:, 0], pts[:, 1], pts[:, 2])
    n = len(pts)
    return np.stack([np.broadcast_to(np.asarray(dc.value(c), dtype=float), (n,)) for c in st.v], axis=1)


def _domain_margin(family, t, pts) -> float:
    """Smallest condition value over the points (negative outside)."""
    g_min = math.inf
    with np.errstate(all="ignore"):
        for c in family.conditions:
            g = np.asarray(c.g(np.full(len(pts), t), pts[:, 0], pts[:, 1], pts[:, 2]), dtype=float)
            g = np.nan_to_num(np.broadcast_to(g, (len(pts),)), nan=-1.0)
            g_min = min(g_min, float(g.min()))
    return g_min if math.isfinite(g_min) else 1.0


@dataclass(frozen=True)
class Advection:
    points: np.ndarray
    error: np.ndarray      # accumulated local error estimate per coordinate
    t: float


def advect_detail(family, points, t0: float, t1: float, tol: float = 1e-10) -> Advection:
    """Integrate dx/dt = v(x, t) for all points jointly."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != 3:
        raise MhdLabError("points must have shape (N, 3)")
    bad = family.violated(np.full(len(pts), t0), *pts.T)
    if bad:
        raise DomainExitError(f"{family.id}: initial points outside domain: {'; '.join(bad)}", t0)
    n = len(pts)

    def rhs(t, y):
        return _velocity(family, t, y.reshape(n, 3)).ravel()

    try:
        traj = dopri5(rhs, t0, pts.ravel(), t1, tol,
                      lambda t, y: _domain_margin(family, t, y.reshape(n, 3)), "domain exit", threshold=0.0)
    except ToleranceError as exc:
        # step collapse against a singular boundary is an exit, not a tolerance failure
        raise DomainExitError(f"{family.id}: trajectory reaches a singular boundary near t={exc.s!r}", exc.s) from exc
    if traj.event is not None:
        raise DomainExitError(f"{family.id}: trajectory leaves the domain at t={traj.event.s:.17g}", traj.event.s)
    return Advection(traj.y[-1].reshape(n, 3), traj.err[-1].reshape(n, 3), float(traj.s[-1]))


def advect(family, points, t0: float, t1: float, tol: float = 1e-10) -> np.ndarray:
    """Positions at ``t1`` of the material points at ``points`` at ``t0``."""
    out = advect_detail(family, points, t0, t1, tol).points
    return out if np.ndim(points) > 1 else out[0]


# --- loops -----------------------------------------------------------------------------


def _segments_cross(p, q, r, s) -> bool:
    d = (q[0] - p[0]) * (s[1] - r[1]) - (q[1] - p[1]) * (s[0] - r[0])
    if d == 0:
        return False
    u = ((r[0] - p[0]) * (s[1] - r[1]) - (r[1] - p[1]) * (s[0] - r[0])) / d
    v = ((r[0] - p[0]) * (q[1] - p[1]) - (r[1] - p[1]) * (q[0] - p[0])) / d
    return 0 < u < 1 and 0 < v < 1


def _self_intersects(pts) -> bool:
    """Check in the best-fit plane; non-planar loops only fail on projected crossings that are also close in 3D."""
    c = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    q = c @ vt[:2].T
    n = len(q)
    scale = np.ptp(pts, axis=0).max()
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(q[i], q[(i + 1) % n], q[j], q[(j + 1) % n]):
                off = abs((c[i] - c[j]) @ vt[2]) if len(vt) > 2 else 0.0
                if off < 1e-9 * max(scale, 1.0):
                    return True
    return False


@dataclass(frozen=True)
class MaterialLoop:
    """Closed curve through ``points`` (N, 3); the last point joins the first."""

    points: np.ndarray
    t: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise MhdLabError("loop points must have shape (N, 3)")
        if len(pts) < MIN_LOOP_POINTS:
            raise MhdLabError(f"a loop needs at least {MIN_LOOP_POINTS} points")
        object.__setattr__(self, "points", pts)

    @classmethod
    def create(cls, points, t: float) -> "MaterialLoop":
        loop = cls(points, t)
        if np.allclose(loop.points[0], loop.points[-1]):
            raise MhdLabError("give each loop point once; closure is implicit")
        if _self_intersects(loop.points):
            raise MhdLabError("loop is self-intersecting")
        return loop

    @classmethod
    def circle(cls, center=(0.0, 0.0, 0.0), radius: float = 1.0, normal=(0.0, 0.0, 1.0),
               n: int = 64, t: float = 0.0) -> "MaterialLoop":
        return cls.create(circle_points(center, radius, normal, n), t)

    @property
    def n(self) -> int:
        return len(self.points)

    def to_csv(self) -> str:
        return polyline_csv(np.full(self.n, self.t), self.points)


def circle_points(center, radius, normal, n):
    nrm = np.asarray(normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    a = np.array([1.0, 0.0, 0.0]) if abs(nrm[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(nrm, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nrm, e1)
    th = 2 * np.pi * np.arange(n) / n
    return np.asarray(center, dtype=float) + radius * (np.outer(np.cos(th), e1) + np.outer(np.sin(th), e2))


def polyline_csv(t, pts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y", "z"])
    for ti, p in zip(np.broadcast_to(t, (len(pts),)), pts):
        w.writerow([f"{ti:.17g}", *(f"{c:.17g}" for c in p)])
    return buf.getvalue()


def _spectral_tangent(pts):
    """d x / d theta for points at theta_k = 2 pi k / N."""
    n = len(pts)
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(pts, axis=0), axis=0))


def loop_integral(vectors, pts) -> float:
    """Trapezoid rule for the closed line integral of sampled ``vectors``."""
    tan = _spectral_tangent(pts)
    return float(2 * np.pi / len(pts) * np.sum(np.einsum("ij,ij->i", vectors, tan)))


@dataclass(frozen=True)
class Circulation:
    value: float
    # |Gamma_N - Gamma_{N/2}|
    quadrature_error: float


def _circ(vectors, pts) -> Circulation:
    full = loop_integral(vectors, pts)
    half = loop_integral(vectors[::2], pts[::2]) if len(pts) % 2 == 0 and len(pts) >= 2 * 8 else full
    return Circulation(full, abs(full - half))


def circulation(family, loop: MaterialLoop, t: float | None = None) -> Circulation:
    """Circulation of v around ``loop`` at time ``t`` (default: the loop's time)."""
    t = loop.t if t is None else t
    pts = loop.points
    st = family.evaluate(np.full(len(pts), t), *pts.T)
    v = np.stack(st.v, axis=1)
    return _circ(v, pts)


def advect_loop(family, loop: MaterialLoop, t1: float, tol: float = 1e-10) -> MaterialLoop:
    return MaterialLoop(advect(family, loop.points, loop.t, t1, tol), t1)


def circulation_series(family, center, radius, normal, t0: float, times, target: float = 1e-8,
                       n0: int = 64, n_max: int = 4096, tol: float = 1e-11):
    """Gamma(t) of a circular material loop seeded at ``t0``.

    N is doubled until the quadrature-doubling change is below ``0.1 * target``
    at every requested time.
    """
    n = n0
    while True:
        loop = MaterialLoop.circle(center, radius, normal, n, t0)
        out = []
        for t in times:
            cur = loop if t == t0 else advect_loop(family, loop, t, tol)
            out.append(circulation(family, cur, t))
        if max(c.quadrature_error for c in out) < 0.1 * target or n >= n_max:
            return n, out
        n *= 2


@dataclass(frozen=True)
class RateCheck:
    dgamma_dt: float
    acceleration_integral: float      # loop integral of (J x B - grad p)/rho
    tension_integral: float           # loop integral of (B.grad)B / rho
    dt_error: float                   # change of dGamma/dt under dt halving


def _acceleration(family, t, pts):
    fj = family.jet(np.full(len(pts), t), *pts.T)
    rho = dc.value(fj.rho)
    Bv = tuple(dc.value(c) for c in fj.B)
    J = dc.curl(fj.B)
    lor = dc.cross(J, Bv)
    gp = dc.grad(fj.p)
    acc = np.stack([(lor[i] - gp[i]) / rho for i in range(3)], axis=1)
    ten = np.stack([dc.directional(fj.B, fj.B[i]) / rho for i in range(3)], axis=1)
    return acc, ten


def circulation_rate_check(family, loop: MaterialLoop, t: float | None = None, tol: float = 1e-12,
                           rel_dt: float = 1e-4) -> RateCheck:
    """dGamma/dt by symmetric differencing of the advected loop, against Kelvin's right side."""
    t = loop.t if t is None else t
    if t != loop.t:
        loop = advect_loop(family, loop, t, tol)
    dt = rel_dt * abs(t) if t != 0 else rel_dt

    def rate(h):
        gp = circulation(family, advect_loop(family, loop, t + h, tol)).value
        gm = circulation(family, advect_loop(family, loop, t - h, tol)).value
        return (gp - gm) / (2 * h)

    r1, r2 = rate(dt), rate(dt / 2)
    acc, ten = _acceleration(family, t, loop.points)
    return RateCheck(r2, loop_integral(acc, loop.points), loop_integral(ten, loop.points), abs(r1 - r2))


# --- field lines ------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldLine:
    s: np.ndarray
    points: np.ndarray
    error: np.ndarray
    t: float
    stop: tuple[str, ...]

    def to_csv(self) -> str:
        return polyline_csv(np.full(len(self.s), self.t), self.points)


def trace_field_line(family, seed, t: float, arclength_span=(-1.0, 1.0), tol: float = 1e-10,
                     b_floor: float = 1e-12) -> FieldLine:
    """Integrate dx/ds = B/|B| from ``seed`` (at s = 0) over ``arclength_span``."""
    seed = np.asarray(seed, dtype=float)
    bad = family.violated(t, *seed)
    if bad:
        raise DomainError(f"{family.id}: seed outside domain: {'; '.join(bad)}", tuple(bad))

    def field(x):
        with np.errstate(all="ignore"):
            st = family.fields(t, x[0], x[1], x[2])
        return np.array([float(np.asarray(dc.value(c))) for c in st.B])

    def rhs(s, x):
        b = field(x)
        return b / np.linalg.norm(b)

    def guard(s, x):
        return min(_domain_margin(family, t, x[None, :]), np.linalg.norm(field(x)) - b_floor)

    parts, stops = [], []
    for end in (arclength_span[0], arclength_span[1]):
        tr = dopri5(rhs, 0.0, seed, end, tol, guard, "domain boundary or |B| below floor", threshold=0.0)
        parts.append(tr)
        if tr.event is not None:
            stops.append(f"stopped at s={tr.event.s:.17g}")
    bwd, fwd = parts
    s = np.concatenate([bwd.s[::-1], fwd.s[1:]])
    pts = np.concatenate([bwd.y[::-1], fwd.y[1:]])
    err = np.concatenate([bwd.err[::-1], fwd.err[1:]])
    return FieldLine(s, pts, err, t, tuple(stops))


@dataclass(frozen=True)
class CirculationVerdict:
    conserved: bool
    max_rate: float            # largest |dGamma/dt| over the probe loops
    max_mismatch: float        # largest |dGamma/dt - loop integral of the acceleration|


def circulation_verdict(family, n_centers: int = 4, radius: float = 0.05,
                        normals=((1.0, 2.0, 3.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
                        threshold: float = 1e-8, n: int = 64, rng=0) -> CirculationVerdict:
    """Empirical Kelvin verdict from small circular loops around random domain points."""
    pts = np.array(family.sample(n_centers, rng)).T
    rates, mism = [], []
    for t, x, y, z in pts:
        for nrm in normals:
            # shrink the loop until it and its advected copies stay in the domain
            for k in range(8):
                try:
                    rc = circulation_rate_check(family, MaterialLoop.circle((x, y, z), radius / 2**k, nrm, n, t))
                    break
                except DomainError:
                    if k == 7:
                        raise
            rates.append(abs(rc.dgamma_dt))
            mism.append(abs(rc.dgamma_dt - rc.acceleration_integral))
    return CirculationVerdict(max(rates) < threshold, max(rates), max(mism))
