"""Numerical profiles for the families defined through reduced ODEs.

The integro-differential equations are made local by carrying their
integrals as extra state.  Profiles are produced by an embedded
Dormand-Prince 5(4) pair; between grid points they are interpolated by
quintic Hermite polynomials (values, slopes and second derivatives at
both ends, the latter two taken from the ODE itself).  Field assembly
never differentiates an interpolant: slopes come from the right-hand side
evaluated on the interpolated state.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from . import diffcalc as dc
from .core import ConstraintError, MhdConfig, MhdLabError, MhdState, validate_params
from .diffcalc import Jet, cos, exp, log, sin, sqrt, tan
from .solutions import Condition, SolutionFamily, _cyl_conditions, _positive_R, _state, g3_ansatz_slope, g3_gamma


class ToleranceError(MhdLabError):
    """The integrator could not meet the requested tolerance."""

    def __init__(self, message: str, s: float | None = None):
        super().__init__(message)
        self.s = s


class SpanError(MhdLabError, ValueError):
    """Query outside the span covered by a profile."""


# --- Dormand-Prince 5(4) ----------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_EPS = np.finfo(float).eps
_B5 = np.array(_A[6] + [0.0])
_E = _B5 - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True)
class Event:
    name: str
    s: float


@dataclass(frozen=True)
class Trajectory:
    s: np.ndarray
    y: np.ndarray
    err: np.ndarray
    event: Event | None


def dopri5(rhs: Callable, s0: float, y0, s_end: float, tol: float,
           singular: Callable | None = None, event_name: str = "singular",
           threshold: float = 1e-6, max_steps: int = 200000, max_step: float | None = None) -> Trajectory:
    """Integrate ``y' = rhs(s, y)`` from ``s0`` to ``s_end``.

    Local error per step is kept below ``tol * max(1, |y|)`` componentwise;
    ``err`` accumulates the absolute local error estimates.  ``singular``
    maps ``(s, y)`` to a signed distance from a singular set; integration
    stops (with an :class:`Event`) when it falls below ``threshold`` or
    changes sign.
    """
    y = np.array(y0, dtype=float)
    s = float(s0)
    direction = 1.0 if s_end >= s0 else -1.0
    span = abs(s_end - s0)
    ss, ys, es = [s], [y.copy()], [np.zeros_like(y)]
    if span == 0.0:
        return Trajectory(np.array(ss), np.array(ys), np.array(es), None)
    hmax = span if max_step is None else float(max_step)
    h = direction * min(span, 1e-2, hmax)
    k1 = np.asarray(rhs(s, y), dtype=float)
    acc = np.zeros_like(y)
    g_prev = singular(s, y) if singular else None
    for _ in range(max_steps):
        if direction * (s + h - s_end) > 0:
            h = s_end - s
        ks = [k1]
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
            ks.append(np.asarray(rhs(s + _C[i] * h, yi), dtype=float))
        y_new = y + h * sum(b * k for b, k in zip(_B5, ks))
        local = np.abs(h * sum(e * k for e, k in zip(_E, ks)))
        scale = tol * np.maximum(1.0, np.maximum(np.abs(y), np.abs(y_new)))
        ratio = float(np.max(local / scale)) if np.all(np.isfinite(y_new)) else np.inf
        if ratio <= 1.0:
            g_new = singular(s + h, y_new) if singular else None
            if singular and (g_new < threshold or np.sign(g_new) != np.sign(g_prev)):
                if abs(h) > 1e-14 * max(1.0, abs(s)) and g_new * g_prev <= 0 and abs(g_prev) > threshold:
                    h *= 0.5
                    continue
                return Trajectory(np.array(ss), np.array(ys), np.array(es), Event(event_name, s + h))
            s += h
            y = y_new
            # rounding floor keeps the estimate meaningful when truncation error vanishes
            acc = acc + local + _EPS * np.abs(y_new)
            k1 = ks[6]
            g_prev = g_new
            ss.append(s)
            ys.append(y.copy())
            es.append(acc.copy())
            if direction * (s - s_end) >= 0:
                return Trajectory(np.array(ss), np.array(ys), np.array(es), None)
            fac = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        else:
            fac = 0.2 if not np.isfinite(ratio) else max(0.2, 0.9 * ratio ** -0.2)
        h = direction * min(abs(h) * fac, hmax)
        if abs(h) < 1e-14 * max(1.0, abs(s)):
            raise ToleranceError(f"step size underflow at s={s!r} (tol={tol})", s)
    raise ToleranceError(f"maximum number of steps exceeded before s={s_end!r}", s)


# --- profiles ---------------------------------------------------------------------


def _second_derivative(rhs, s, y, dy):
    """y'' = f_s + f_y y' via one-variable jets (exact up to rounding)."""
    one = np.ones_like(s)
    sj = Jet(s, one[..., None], np.zeros(np.shape(s) + (1, 1)))
    yj = [Jet(y[..., i], dy[..., i][..., None], np.zeros(np.shape(s) + (1, 1))) for i in range(y.shape[-1])]
    out = rhs(sj, yj)
    return np.stack([np.asarray(dc.as_jet(o, sj).grad[..., 0]) * one for o in out], axis=-1)


@dataclass(frozen=True)
class ReducedProfile:
    """A solved reduced equation on a strictly increasing grid."""

    kind: str
    names: tuple[str, ...]
    grid: np.ndarray
    states: np.ndarray          # (n, m)
    slopes: np.ndarray          # (n, m), from the ODE
    curvatures: np.ndarray      # (n, m), from the ODE
    errors: np.ndarray          # (n, m), global error estimates at the grid nodes
    rhs: Callable = field(repr=False)
    params: Mapping[str, float] = field(default_factory=dict)
    events: tuple[Event, ...] = ()
    tol: float = 1e-10
    s0: float = 0.0

    @property
    def span(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def _check(self, s):
        lo, hi = self.span
        s = np.asarray(s, dtype=float)
        if np.any(s < lo) or np.any(s > hi):
            raise SpanError(f"{self.kind} profile covers [{lo:.6g}, {hi:.6g}]; query outside span")
        return s

    def __call__(self, s) -> np.ndarray:
        """Interpolated state, shape ``shape(s) + (m,)``."""
        return self._hermite(self._check(s))

    def _hermite(self, s, slope: bool = False):
        g = self.grid
        i = np.clip(np.searchsorted(g, s, side="right") - 1, 0, len(g) - 2)
        h = g[i + 1] - g[i]
        u = ((s - g[i]) / h)[..., None]
        hh = h[..., None]
        y0, y1 = self.states[i], self.states[i + 1]
        d0, d1 = self.slopes[i] * hh, self.slopes[i + 1] * hh
        c0, c1 = self.curvatures[i] * hh**2, self.curvatures[i + 1] * hh**2
        u2, u3 = u * u, u * u * u
        h00 = 1 - 10 * u3 + 15 * u3 * u - 6 * u3 * u2
        h01 = 1 - h00
        h10 = u - 6 * u3 + 8 * u3 * u - 3 * u3 * u2
        h11 = -4 * u3 + 7 * u3 * u - 3 * u3 * u2
        h20 = 0.5 * (u2 - 3 * u3 + 3 * u3 * u - u3 * u2)
        h21 = 0.5 * (u3 - 2 * u3 * u + u3 * u2)
        if slope:
            u4 = u3 * u
            return (-30 * u2 * (1 - u) ** 2 * (y0 - y1) + (1 - 18 * u2 + 32 * u3 - 15 * u4) * d0
                    + (-12 * u2 + 28 * u3 - 15 * u4) * d1 + 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4) * c0
                    + 0.5 * (3 * u2 - 8 * u3 + 5 * u4) * c1) / hh
        return h00 * y0 + h01 * y1 + h10 * d0 + h11 * d1 + h20 * c0 + h21 * c1

    @cached_property
    def interp_errors(self) -> np.ndarray:
        """Interpolation error per interval, shape ``(n - 1, m)``.

        The interpolant's error vanishes to third order at both nodes, so its
        derivative is sampled off-centre: the ODE defect at u = 1/4 and 3/4
        times the step bounds the mid-step error with a factor of about 3 to spare.
        """
        h = np.diff(self.grid)
        out = np.zeros((len(h), self.states.shape[1]))
        for u in (0.25, 0.75):
            s = self.grid[:-1] + u * h
            y = self._hermite(s)
            f = np.stack([np.broadcast_to(np.asarray(v, dtype=float), s.shape)
                          for v in self.rhs(s, [y[:, k] for k in range(y.shape[1])])], axis=-1)
            out = np.maximum(out, h[:, None] * np.abs(self._hermite(s, slope=True) - f))
        return out

    def error_at(self, s) -> np.ndarray:
        """Error estimate at ``s``: node errors of the enclosing step plus its interpolation error."""
        s = self._check(s)
        i = np.clip(np.searchsorted(self.grid, s, side="right") - 1, 0, len(self.grid) - 2)
        return (np.maximum(self.errors[i], self.errors[i + 1]) + self.interp_errors[i]
                + 4 * _EPS * np.abs(self(s)))

    def jets(self, s):
        """State as jets in ``s`` (a Jet or array), slopes from the ODE."""
        sv = np.asarray(dc.value(s), dtype=float)
        y = self(sv)
        dy = np.stack([np.broadcast_to(np.asarray(v, dtype=float), sv.shape)
                       for v in self.rhs(sv, [y[..., k] for k in range(y.shape[-1])])], axis=-1)
        d2 = _second_derivative(self.rhs, sv, y, dy)
        if not isinstance(s, Jet):
            return [y[..., k] for k in range(y.shape[-1])]
        return [dc.lift(s, y[..., k], dy[..., k], d2[..., k]) for k in range(y.shape[-1])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", *self.names, *(f"err_{n}" for n in self.names)])
        for s, row, err in zip(self.grid, self.states, self.errors):
            w.writerow([f"{s:.17g}", *(f"{v:.17g}" for v in row), *(f"{e:.17g}" for e in err)])
        return buf.getvalue()


# ratio between a profile's tolerance and that of its error-estimating companion
_REFINE = 32.0


def _solve(kind, names, rhs, s0, y0, span, tol, singular=None, event_name="singular", params=None,
           max_step=None, estimate=True):
    """Integrate both ways from ``s0``.

    With ``estimate`` the global error at each node is taken as the change
    against a companion solve at ``tol / 32`` plus that solve's own
    accumulated local error; summed local errors alone miss the growth of
    earlier errors along the flow.
    """
    lo, hi = float(span[0]), float(span[1])
    if not lo <= s0 <= hi:
        raise ConstraintError(kind, [f"initial point s0={s0} must lie in span [{lo}, {hi}]"])

    def rhs_arr(s, y):
        return np.array([np.asarray(v, dtype=float) for v in rhs(s, list(y))])

    fwd = dopri5(rhs_arr, s0, y0, hi, tol, singular, event_name, max_step=max_step)
    bwd = dopri5(rhs_arr, s0, y0, lo, tol, singular, event_name, max_step=max_step)
    grid = np.concatenate([bwd.s[::-1], fwd.s[1:]])
    states = np.concatenate([bwd.y[::-1], fwd.y[1:]])
    errors = np.concatenate([bwd.err[::-1], fwd.err[1:]])
    if len(grid) < 2:
        raise ToleranceError(f"{kind}: singular event at the initial point")
    slopes = np.array([rhs_arr(s, y) for s, y in zip(grid, states)])
    curv = _second_derivative(rhs, grid, states, slopes)
    events = tuple(e.event for e in (bwd, fwd) if e.event is not None)
    if estimate:
        fine = _solve(kind, names, rhs, s0, y0, span, tol / _REFINE, singular, event_name, params,
                      max_step, estimate=False)
        flo, fhi = fine.span
        inside = (grid >= flo) & (grid <= fhi)
        change = np.abs(states[inside] - fine(grid[inside]))
        spread = np.zeros_like(states)
        spread[inside] = change + fine.error_at(grid[inside])
        # nodes past the companion's singular event keep the largest change seen
        spread[~inside] = np.max(spread[inside], axis=0) if inside.any() else 0.0
        errors = np.maximum(errors, spread)
    return ReducedProfile(kind, tuple(names), grid, states, slopes, curv, errors, rhs,
                          dict(params or {}), events, tol, s0)


# --- G5: r Y' = a2 beta_o r^2 cos^2 Y + a2, with theta' = tan(Y)/r ------------------


def beta_o(params) -> float:
    return (2 * params["A_o"] + params["Z_o"] ** 2) / params["X_o"] ** 2


def g5_rhs(params):
    a2, b = params["alpha2"], beta_o(params)

    def rhs(r, y):
        Y = y[0]
        c = cos(Y)
        return [(a2 * b * r * r * c * c + a2) / r, tan(Y) / r]
    return rhs


def solve_g5(params=None, r_span=(0.5, 2.0), Y0=None, tol=1e-10, config: MhdConfig | None = None,
             max_step: float | None = None) -> ReducedProfile:
    prm = validate_params("G5", params, config)
    if Y0 is not None:
        prm["Y0"] = float(Y0)
    if not r_span[0] > 0:
        raise ConstraintError("G5", ["r_span must lie in (0, inf)"])
    if abs(math.cos(prm["Y0"])) < 1e-6:
        raise ConstraintError("G5", ["Y0 != (2k+1) pi/2"])
    return _solve("G5", ("Y", "theta"), g5_rhs(prm), prm["r0"], [prm["Y0"], 0.0], r_span, tol,
                  lambda s, y: abs(math.cos(y[0])), "Y -> (2k+1) pi/2", prm, max_step)


# --- G6: augmented (Y, th1, th2) ------------------------------------------------------


def g6_rhs(params, heli_sign: float = 1.0):
    a1, a2, b = params["alpha1"], params["alpha2"], beta_o(params)
    q = 1 + a1 * a1

    def rhs(s, y):
        Y, th1 = y[0], y[1]
        c, sn = cos(Y), sin(Y)
        d = c - a1 * sn
        dY = (a2 * b / q * d * d * exp(2 * heli_sign * th1) + (a1 + a2) / q) / s
        return [dY, c / (d * s), sn / (d * s)]
    return rhs


def solve_g6(params=None, s_span=(0.5, 2.0), Y0=None, tol=1e-10, heli_sign: float = 1.0,
             config: MhdConfig | None = None, max_step: float | None = None) -> ReducedProfile:
    """``heli_sign`` = -1 integrates the exp[-2 theta1] alternative."""
    prm = validate_params("G6", params, config)
    if Y0 is not None:
        prm["Y0"] = float(Y0)
    a1 = prm["alpha1"]
    if not s_span[0] > 0:
        raise ConstraintError("G6", ["s_span must lie in (0, inf)"])

    def dist(s, y):
        return abs(math.cos(y[0]) - a1 * math.sin(y[0])) / math.sqrt(1 + a1 * a1)

    if dist(0, [prm["Y0"]]) < 1e-6:
        raise ConstraintError("G6", ["Y0 != arctan(1/alpha1) + k pi"])
    prof = _solve("G6", ("Y", "theta1", "theta2"), g6_rhs(prm, heli_sign), prm["s0"],
                  [prm["Y0"], 0.0, 0.0], s_span, tol, dist, "cos Y - alpha1 sin Y -> 0", prm, max_step)
    return prof


def g6_zero_closed_Y(params, s):
    """Closed-form Y(s) for alpha2 = 0 in terms of s = r exp(-alpha1 phi)."""
    a1 = params["alpha1"]
    k = a1 / (1 + a1 * a1)
    return params["Y0"] + k * np.log(np.asarray(s) / params["s0"])


# --- G3 general: (W, F) with F' = 1/W -------------------------------------------------


def g3_coefficients(params, variant: str = "reference"):
    """Coefficient callables (a, b) with reduced equation a(W, F) W' = b(W, F)."""
    a1, a2, g = params["alpha1"], params["alpha2"], params["gamma"]
    AR, XR = params["A_o"] / params["R_o"], params["X_o"] ** 2 / params["R_o"]
    if variant == "corrected":
        mag_exp, mag_shift = 2.0, -(a2 / a1 - 1)
    else:
        mag_exp, mag_shift = 4 - 2 / a1, (1 - a2) / a1

    def parts(W, F):
        pe = AR * W ** (2 - g) * exp(2 * (2 - g) * F)
        me = XR * exp(mag_exp * F)
        coef = W**3 - g * pe - me
        rest = W**3 - W * W / a1 + 2 * (g - a2 / a1) * pe + mag_shift * me
        return coef, rest
    return parts


def g3_reduced_residual(params, W, dW, F, variant: str = "reference"):
    """Left side of the G3 reduced equation at (W, W', F)."""
    coef, rest = g3_coefficients(params, variant)(W, F)
    return coef * dW - rest


def g3_rhs(params, variant="reference"):
    parts = g3_coefficients(params, variant)

    def rhs(s, y):
        W, F = y[0], y[1]
        coef, rest = parts(W, F)
        return [rest / coef, 1.0 / W]
    return rhs


def solve_g3_general(params=None, s_span=(-0.5, 0.5), W0=None, tol=1e-10, variant: str = "reference",
                     config: MhdConfig | None = None, max_step: float | None = None) -> ReducedProfile:
    """``variant="corrected"`` uses the magnetic term consistent with induction."""
    prm = validate_params("G3/general", params, config)
    if W0 is not None:
        prm["W0"] = float(W0)
    if not prm["W0"] > 0:
        raise ConstraintError("G3/general", ["W0 > 0"])
    parts = g3_coefficients(prm, variant)

    def dist(s, y):
        if y[0] <= 0:
            return -1.0
        coef, _ = parts(y[0], y[1])
        return min(abs(coef) / max(1.0, y[0] ** 3), y[0])

    prof = _solve("G3/general", ("W", "F"), g3_rhs(prm, variant), prm["s0"], [prm["W0"], 0.0],
                  s_span, tol, dist, "coefficient of dW/ds -> 0", prm, max_step)
    return prof


# --- G10 general: (W, I1, I2), I1' = 1/W, I2' = 1/(W - a^2) ----------------------------


def g10_coefficients(params):
    g, AR = params["gamma"], params["A_o"] / params["R_o"]
    KR = (params["X_o"] ** 2 + params["Y_o"] ** 2) / params["R_o"]
    a2 = params["Z_o"] ** 2 / params["R_o"]

    def parts(W, I1, I2):
        pe = AR * W ** (-g) * exp(2 * (2 - g) * I1)
        me = KR * W / (W - a2) ** 3 * exp(2 * I2)
        coef = W - g * pe - me
        rest = W - 2 * (2 - g) * pe - me
        return coef, rest
    return parts, a2


def g10_reduced_residual(params, W, dW, I1, I2):
    parts, _ = g10_coefficients(params)
    coef, rest = parts(W, I1, I2)
    return coef * dW - rest


def g10_rhs(params):
    parts, a2 = g10_coefficients(params)

    def rhs(z, y):
        W, I1, I2 = y
        coef, rest = parts(W, I1, I2)
        return [rest / coef, 1.0 / W, 1.0 / (W - a2)]
    return rhs


def solve_g10_general(params=None, z_span=(-0.5, 0.5), W0=None, tol=1e-10,
                      config: MhdConfig | None = None, max_step: float | None = None) -> ReducedProfile:
    prm = validate_params("G10/general", params, config)
    if W0 is not None:
        prm["W0"] = float(W0)
    parts, a2 = g10_coefficients(prm)
    if abs(prm["W0"] - a2) < 1e-12 or prm["W0"] == 0:
        raise ConstraintError("G10/general", ["W0 != a_o^2 and W0 != 0"])

    def dist(z, y):
        W = y[0]
        if W == 0:
            return -1.0
        coef, _ = parts(W, y[1], y[2])
        return min(abs(W - a2), abs(coef) / max(1.0, abs(W)))

    return _solve("G10/general", ("W", "I1", "I2"), g10_rhs(prm), prm["z0"], [prm["W0"], 0.0, 0.0],
                  z_span, tol, dist, "W -> a_o^2 (Alfven resonance) or degenerate W' coefficient", prm, max_step)


# --- ansatz (straight-line) checks -----------------------------------------------------


def g3_case_reduced_params(case: str, params=None) -> dict[str, float]:
    """Reduced-equation parameters implied by a G3 case (A_o/R_o, X_o^2/R_o fixed by the case)."""
    prm = validate_params(f"G3/{case}", params)
    a1 = prm["alpha1"]
    a2 = prm.get("alpha2", a1 + 1)
    g = g3_gamma(prm, case)
    if case == "case1":
        R, A, X2 = prm["R_o"], prm["R_o"] / (2 * (a1 - 1)), prm["X_o"] ** 2
    elif case == "case2":
        R, A, X2 = prm["R_o"], prm["A_o"], prm["R_o"] / (2 - a2)
    elif case == "case3":
        A, X2 = prm["A_o"], prm["X_o"] ** 2
        R = (2 - a2) * (2 * A + X2)
    elif case == "case4":
        R = prm["R_o"]
        A, X2 = (1 - a1) * R / (2 * (a2 - a1) - 1), R / (2 * a1 - a2)
    elif case == "case5":
        R = prm["R_o"]
        A, X2 = R / (2 * (2 * a1 - a2)), (a1 - 2) * R / (4 * a1 - 3 * a2 + 1)
    else:
        raise MhdLabError(f"unknown G3 case {case!r}")
    return {"alpha1": a1, "alpha2": a2, "gamma": g, "A_o": A, "R_o": R, "X_o": math.sqrt(X2),
            "C_1": g3_ansatz_slope(prm, case), "C_2": prm["C_2"]}


def g3_ansatz_residual(case: str, s, params=None) -> np.ndarray:
    """Reduced equation along W = C1 s + C2, F = ln(W)/C1."""
    rp = g3_case_reduced_params(case, params)
    s = np.asarray(s, dtype=float)
    W = rp["C_1"] * s + rp["C_2"]
    return g3_reduced_residual(rp, W, rp["C_1"] + 0 * s, np.log(W) / rp["C_1"])


G10_CASES = {"case1": (1.0, 4.0 / 3.0), "case2": (2.0 / 3.0, 5.0 / 4.0)}


def g10_case_reduced_params(case: str, params=None) -> dict[str, float]:
    prm = validate_params(f"G10/{case}", params)
    C1, g = G10_CASES[case]
    R = prm["R_o"] if case == "case1" else 2 * prm["A_o"] + prm["X_o"] ** 2 + prm["Y_o"] ** 2
    return {"gamma": g, "A_o": prm["A_o"], "R_o": R, "X_o": prm["X_o"], "Y_o": prm["Y_o"], "Z_o": prm["Z_o"],
            "C_1": C1, "C_2": prm["C_2"]}


def g10_ansatz_residual(case: str, z, params=None) -> np.ndarray:
    """Reduced equation along W = C1 z + C2 with I1 = ln W / C1, I2 = ln(W - a^2)/C1."""
    rp = g10_case_reduced_params(case, params)
    z = np.asarray(z, dtype=float)
    C1 = rp["C_1"]
    W = C1 * z + rp["C_2"]
    a2 = rp["Z_o"] ** 2 / rp["R_o"]
    return g10_reduced_residual(rp, W, C1 + 0 * z, np.log(W) / C1, np.log(W - a2) / C1)


@dataclass(frozen=True)
class G9AnsatzResiduals:
    relation_f: np.ndarray      # f - (U - beta W - s + beta)
    relation_uw: np.ndarray     # beta U' + W' + 1
    relation_uw_material: np.ndarray   # f (beta U' + W') + 1, from beta*(x-momentum) + (z-momentum)
    pressure_balance: np.ndarray


def g9_ansatz_residuals(s, params=None) -> G9AnsatzResiduals:
    """The G9 overdetermined system evaluated on the closed-form branch.

    Along the closed form, f = xi = C_2 - s/2 and
    U(s) = 2b/(1+b^2) ln xi + s/(2(1+b^2)) + c_U,
    W(s) = 2/(1+b^2) ln xi - b s/(2(1+b^2)) + c_W,
    with R_o, A_o read off the density and pressure prefactors.
    """
    prm = validate_params("G9", params)
    a, b, C2, C3 = prm["alpha"], prm["beta"], prm["C_2"], prm["C_3"]
    g = prm["gamma"]
    q = 1 + b * b
    K = prm["Y_o"] ** 2 + q * prm["Z_o"] ** 2
    R = -(2 * a + 1) * q * K / (2 * b)
    A = -(2 * a + 1) / (4 * a + 3) * K / (2 * b)
    s = np.asarray(s, dtype=float)
    xi = C2 - s / 2
    cU = (C2 + b * (C3 - 1)) / q
    cW = (C3 + b * (b - C2)) / q
    U = 2 * b / q * np.log(xi) + s / (2 * q) + cU
    W = 2 / q * np.log(xi) - b * s / (2 * q) + cW
    dU = -b / (q * xi) + 1 / (2 * q)
    dW = -1 / (q * xi) - b / (2 * q)
    f, df = xi, -0.5 + 0 * s
    intf = -2 * np.log(xi)      # antiderivative of 1/f fixed by the density prefactor
    rel_f = f - (U - b * W - s + b)
    rel_uw = b * dU + dW + 1
    bal = (f**3 * df + f**3 - b * f * f
           - q * A / R * (g * df + g + 2 * a) * f ** (2 - g) * np.exp((1 - g) * intf)
           - q / R * K * (df + 1 + a) * np.exp(-intf))
    return G9AnsatzResiduals(rel_f, rel_uw, f * (b * dU + dW) + 1, bal)


# --- field assembly ------------------------------------------------------------------------


def _profile_condition(profile: ReducedProfile, s_of, name: str, margin_frac: float = 0.02):
    lo, hi = profile.span
    m = margin_frac * (hi - lo)
    return Condition(f"{name} within profile span [{lo:.6g}, {hi:.6g}]",
                     lambda t, x, y, z: np.minimum(s_of(t, x, y, z) - lo, hi - s_of(t, x, y, z)), m)


ASSEMBLY_VARIANTS = {
    "G5": ("reference", "corrected"),
    "G6": ("reference", "printed-Bz", "exp-Bz", "corrected"),
    "G3/general": ("reference", "corrected"),
    "G10/general": ("reference",),
}


def assemble_field(profile: ReducedProfile, family_id: str | None = None, params=None,
                   variant: str = "reference") -> SolutionFamily:
    """Full field map of G5, G6, G3/general or G10/general from a profile."""
    family_id = family_id or profile.kind
    if family_id != profile.kind:
        raise MhdLabError(f"profile of kind {profile.kind} cannot assemble {family_id}")
    prm = dict(profile.params)
    if params:
        prm.update(params)
    if variant not in ASSEMBLY_VARIANTS[family_id]:
        raise ConstraintError(family_id, [f"unknown variant {variant!r}"])
    builder = {"G5": _assemble_g5, "G6": _assemble_g6, "G3/general": _assemble_g3,
               "G10/general": _assemble_g10}[family_id]
    fields, conds, box, extras = builder(profile, prm, variant)
    return SolutionFamily(family_id, prm, float(prm["gamma"]), fields, conds, box, variant,
                          {"profile": profile, **extras})


def _rphi(x, y):
    r = sqrt(x * x + y * y)
    return r, dc.arctan2(y, x), x / r, y / r


def _assemble_g5(profile, prm, variant):
    a1, a2, A, Wo, Xo, Zo = (prm[k] for k in ("alpha1", "alpha2", "A_o", "W_o", "X_o", "Z_o"))
    const_rho = bool(prm.get("const_density", 0.0))
    # B.grad v_z = 0 requires the phi- and theta-coefficients of v_z to match
    v_theta = a1 if variant == "corrected" else a2
    # B.grad rho = 0 needs rho to depend on phi - theta only
    rho_theta = a2 - a1 if variant == "corrected" else a2

    def fields(t, x, y, z):
        r, phi, c, s_ = _rphi(x, y)
        Y, th = profile.jets(r)
        e = exp(a2 * phi - a2 * th)
        rho = (prm["R_o"] * exp(2 * (a2 - a1) * phi - 2 * rho_theta * th) if const_rho
               else exp(2 * (a2 - a1) * phi) * _positive_R(prm, r))
        p = A * e * e
        vz = Wo * exp(a1 * phi - v_theta * th)
        Br = Xo / r * e
        Bp = Br * tan(Y)
        return _state(rho, p, (0.0 * r, 0.0 * r, vz), (Br * c - Bp * s_, Br * s_ + Bp * c, Zo * e))

    conds = _cyl_conditions() + (_profile_condition(profile, lambda t, x, y, z: np.hypot(x, y), "r"),)
    hi = profile.span[1]
    return fields, conds, ((0.0, 1.0), (-hi, hi), (-hi, hi), (-1.0, 1.0)), {}


def _assemble_g6(profile, prm, variant):
    a1, a2, A, Wo, Xo, Zo = (prm[k] for k in ("alpha1", "alpha2", "A_o", "W_o", "X_o", "Z_o"))
    const_rho = bool(prm.get("const_density", 0.0))

    def s_of(t, x, y, z):
        return np.hypot(x, y) * np.exp(-a1 * np.arctan2(y, x))

    def fields(t, x, y, z):
        r, phi, c, s_ = _rphi(x, y)
        s = r * exp(-a1 * phi)
        Y, th1, th2 = profile.jets(s)
        cy, sy = cos(Y), sin(Y)
        d = cy - a1 * sy
        rho = (prm["R_o"] * exp(2 * (a2 - a1) * phi - 2 * a2 * th2) if const_rho
               else exp(2 * (a2 - a1) * phi) * _positive_R(prm, s))
        p = A * exp(2 * a2 * phi - 2 * a2 * th2)
        # flux surfaces are phi - theta2 = const
        vz = Wo * exp(a1 * phi - (a1 if variant == "corrected" else a2) * th2)
        amp = Xo * exp(a2 * phi - th1 - a2 * th2) / d
        Br, Bp = amp * cy, amp * sy
        if variant in ("reference", "printed-Bz"):
            Bz = Zo * (a2 * phi - a2 * th2)
        else:
            Bz = Zo * exp(a2 * phi - a2 * th2)
        return _state(rho, p, (0.0 * r, 0.0 * r, vz), (Br * c - Bp * s_, Br * s_ + Bp * c, Bz))

    conds = _cyl_conditions() + (_profile_condition(profile, s_of, "s = r exp(-alpha1 phi)"),)
    hi = profile.span[1]
    return fields, conds, ((0.0, 1.0), (-2 * hi, 2 * hi), (-2 * hi, 2 * hi), (-1.0, 1.0)), {}


def _assemble_g3(profile, prm, variant):
    a1, a2, A, Ro, U, Xo, th0, g = (prm[k] for k in ("alpha1", "alpha2", "A_o", "R_o", "U_o", "X_o",
                                                     "theta_o", "gamma"))
    if variant == "corrected":
        rho_k, b_k = 2 * (a2 / a1 - 2), a2 / a1 - 1
    else:
        rho_k, b_k = 2 * (a2 / a1 - 1), (a2 - 1) / a1

    def s_of(t, x, y, z):
        return z + np.log(t) / a1

    def fields(t, x, y, z):
        s = z + log(t) / a1
        W, F = profile.jets(s)
        rho = Ro / W * t ** (2 * (a1 - a2) / a1) * exp(rho_k * F)
        p = A / W**g * t ** (-2 * a2 / a1) * exp(2 * (a2 / a1 - g) * F)
        th = th0 + log(t) / a1 - F / a1
        amp = Xo / W * t ** (-a2 / a1) * exp(b_k * F)
        sn, cs = sin(th), cos(th)
        return _state(rho, p, (x / t - U / t * sn, y / t - U / t * cs, (W - 1 / a1) / t),
                      (amp * sn, amp * cs, 0.0))

    lo, hi = profile.span
    conds = (Condition("t > 0", lambda t, x, y, z: t, 0.3), _profile_condition(profile, s_of, "s = z + ln(t)/alpha1"))
    return fields, conds, ((0.5, 2.0), (-2.0, 2.0), (-2.0, 2.0), (lo - 1.0, hi + 1.0)), {}


def _assemble_g10(profile, prm, variant):
    A, Ro, Uo, Vo, Xo, Yo, Zo, g = (prm[k] for k in ("A_o", "R_o", "U_o", "V_o", "X_o", "Y_o", "Z_o", "gamma"))
    a2 = Zo**2 / Ro

    def fields(t, x, y, z):
        W, I1, I2 = profile.jets(z)
        h = exp(I2) / (W - a2)
        return _state(Ro / (t * t * W), A / t**4 * W ** (-g) * exp(2 * (2 - g) * I1),
                      ((x - Uo) / t + a2 / Zo * Xo / t * h, (y - Vo) / t + a2 / Zo * Yo / t * h, W / t),
                      (Xo / t**2 * h, Yo / t**2 * h, Zo / t**2 + 0.0 * W))

    lo, hi = profile.span
    conds = (Condition("t != 0", lambda t, x, y, z: np.abs(t), 0.3),
             _profile_condition(profile, lambda t, x, y, z: z, "z"))
    return fields, conds, ((0.5, 2.0), (-2.0, 2.0), (-2.0, 2.0), (lo, hi)), {"a_o2": a2}


# --- one entry point for every family id --------------------------------------------------

REDUCED_IDS = ("G3/general", "G5", "G6", "G10/general")

_SOLVERS = {
    "G5": (lambda prm, span, tol, variant: solve_g5(prm, span or (0.5, 2.0), tol=tol)),
    "G6": (lambda prm, span, tol, variant: solve_g6(prm, span or (0.5, 2.0), tol=tol)),
    "G3/general": (lambda prm, span, tol, variant: solve_g3_general(
        prm, span or (-0.5, 0.05), tol=tol, variant="corrected" if variant == "corrected" else "reference")),
    "G10/general": (lambda prm, span, tol, variant: solve_g10_general(prm, span or (-0.5, 0.5), tol=tol)),
}


def family_variants(family_id: str) -> tuple[str, ...]:
    from .solutions import VARIANTS
    if family_id in ASSEMBLY_VARIANTS:
        return ASSEMBLY_VARIANTS[family_id]
    return VARIANTS.get(family_id, ("reference",))


def build_family(family_id: str, params=None, variant: str | None = None, config: MhdConfig | None = None,
                 span=None, tol: float | None = None) -> SolutionFamily:
    """Closed-form family, or a profile-backed one solved on ``span``."""
    from .solutions import make_family
    if family_id not in REDUCED_IDS:
        return make_family(family_id, params, variant, config)
    variant = variant or "reference"
    if variant not in ASSEMBLY_VARIANTS[family_id]:
        raise ConstraintError(family_id, [f"unknown variant {variant!r} (choose from {ASSEMBLY_VARIANTS[family_id]})"])
    cfg = config or MhdConfig()
    prm = validate_params(family_id, params, cfg)
    prof = _SOLVERS[family_id](prm, span, tol or cfg.ode_tol, variant)
    return assemble_field(prof, family_id, None, variant)
