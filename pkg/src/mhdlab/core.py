"""Shared value types, coordinate conversions and parameter validation.

Units are dimensionless and the magnetic permeability is fixed to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np


class MhdLabError(Exception):
    """Base class for all errors raised by mhdlab."""


class DomainError(MhdLabError, ValueError):
    """A point lies outside the domain where a field is defined."""

    def __init__(self, message: str, conditions: tuple[str, ...] = ()):
        super().__init__(message)
        self.conditions = conditions


class AxisSingularityError(DomainError):
    """Cylindrical conversion requested on the symmetry axis r = 0."""


class ConstraintError(MhdLabError, ValueError):
    """One or more parameter constraints are violated.

    ``failures`` lists the names of every violated constraint, not just
    the first one.
    """

    def __init__(self, family_id: str, failures: list[str]):
        self.family_id = family_id
        self.failures = list(failures)
        joined = "; ".join(self.failures)
        super().__init__(f"{family_id}: constraint violation: {joined}")


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("t", "x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"non-finite coordinate {name}={getattr(self, name)!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.t, self.x, self.y, self.z)


@dataclass(frozen=True)
class MhdState:
    """The nine unknowns at one point (or a batch of points).

    Components may be floats, numpy arrays of a common shape, or jets;
    ``v`` and ``B`` are 3-tuples of components.
    """

    rho: Any
    p: Any
    v: tuple
    B: tuple

    def as_array(self) -> np.ndarray:
        """Stack to ``(..., 8)`` in the order rho, p, v1, v2, v3, B1, B2, B3."""
        comps = [self.rho, self.p, *self.v, *self.B]
        return np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in comps]), axis=-1)

    @classmethod
    def from_array(cls, arr) -> "MhdState":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[..., 0], arr[..., 1], tuple(arr[..., 2:5].T), tuple(arr[..., 5:8].T))


STATE_FIELDS = ("rho", "p", "v1", "v2", "v3", "B1", "B2", "B3")


@dataclass(frozen=True)
class CylComponents:
    r: float
    phi: float
    z: float
    a_r: float = 0.0
    a_phi: float = 0.0
    a_z: float = 0.0


@dataclass(frozen=True)
class MhdConfig:
    gamma: float = 5.0 / 3.0
    residual_tol: float = 1e-8
    ode_tol: float = 1e-10
    quad_tol: float = 1e-8

    def __post_init__(self):
        if not self.gamma >= 1.0:
            raise ConstraintError("MhdConfig", [f"gamma >= 1 (got {self.gamma})"])


def cyl_to_cart(q: CylComponents) -> tuple[np.ndarray, np.ndarray]:
    """Position and vector components in Cartesian form."""
    if not q.r > 0:
        raise AxisSingularityError("cylindrical frame undefined on the axis r = 0")
    c, s = math.cos(q.phi), math.sin(q.phi)
    pos = np.array([q.r * c, q.r * s, q.z])
    vec = np.array([q.a_r * c - q.a_phi * s, q.a_r * s + q.a_phi * c, q.a_z])
    return pos, vec


def cart_to_cyl(position, vector=(0.0, 0.0, 0.0)) -> CylComponents:
    x, y, z = (float(c) for c in position)
    r = math.hypot(x, y)
    if r == 0.0:
        raise AxisSingularityError("cylindrical frame undefined on the axis r = 0")
    phi = math.atan2(y, x)
    if phi == -math.pi:
        phi = math.pi
    c, s = x / r, y / r
    ax, ay, az = (float(v) for v in vector)
    return CylComponents(r, phi, z, ax * c + ay * s, -ax * s + ay * c, az)


# --- parameter validation -------------------------------------------------

# Each rule is (name, predicate(params) -> bool). Rules are evaluated in
# order and every failing name is collected; a rule whose predicate raises
# (e.g. a missing key it depends on) counts as failed.
Rule = tuple[str, Callable[[Mapping[str, float]], bool]]


def _sgn(v: float) -> int:
    return (v > 0) - (v < 0)



@dataclass(frozen=True)
class ParamSpec:
    """Parameter vocabulary of a family: names, defaults and constraints."""

    defaults: Mapping[str, float]
    rules: tuple[Rule, ...] = ()
    fixed: Mapping[str, float] = field(default_factory=dict)


def _g1_rules(branch: str) -> tuple[Rule, ...]:
    rules: list[Rule] = [
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("alpha != 0", lambda p: p["alpha"] != 0),
        ("sgn[W_o] = sgn[alpha]", lambda p: _sgn(p["W_o"]) == _sgn(p["alpha"])),
        ("theta_o > 0 (log argument theta_o/(t R) > 0)", lambda p: p["theta_o"] > 0),
    ]
    if branch == "gamma=1":
        rules.append(("0 <= A_o < 1/(4 alpha^2)",
                      lambda p: 0 <= p["A_o"] < 1.0 / (4 * p["alpha"] ** 2)))
    else:
        rules.append(("A_o > 0", lambda p: p["A_o"] > 0))
    if branch == "generic":
        rules.append(("gamma >= 1 and gamma not in {1, 2}",
                      lambda p: p["gamma"] >= 1 and p["gamma"] not in (1.0, 2.0)))
    return tuple(rules)


def _g2_rules(branch: str) -> tuple[Rule, ...]:
    rules: list[Rule] = [
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("alpha1 > 0", lambda p: p["alpha1"] > 0),
        ("alpha2 != 0", lambda p: p["alpha2"] != 0),
    ]
    if branch == "generic":
        def _no_pole(p):
            g = p["gamma"]
            bad = [c for c in (4 - 2 * g, 5 - 2 * g) if c <= 0 and float(c).is_integer()]
            return g >= 1 and g not in (1.5, 2.0) and not bad
        rules.append(("gamma >= 1, gamma not in {3/2, 2}, 2F1 lower parameter not a pole", _no_pole))
    return tuple(rules)


_G3_CASE_RULES: dict[str, tuple[Rule, ...]] = {
    "case1": (
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("alpha1 > 0", lambda p: p["alpha1"] > 0),
        ("alpha1 != 1 (pressure amplitude pole)", lambda p: p["alpha1"] != 1),
    ),
    "case2": (
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("3/2 <= alpha2 < 2", lambda p: 1.5 <= p["alpha2"] < 2),
    ),
    "case3": (
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("1 < alpha2 < 2", lambda p: 1 < p["alpha2"] < 2),
    ),
    "case4": (
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("1/2 < alpha1 < 1", lambda p: 0.5 < p["alpha1"] < 1),
        # printed as 2a1 < a2 < (2a1+1)/2, an empty interval for a1 > 1/2;
        # the bounds are swapped so that p > 0 and the B amplitude is real
        ("(2 alpha1 + 1)/2 < alpha2 < 2 alpha1",
         lambda p: (2 * p["alpha1"] + 1) / 2 < p["alpha2"] < 2 * p["alpha1"]),
    ),
    "case5": (
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("1/2 < alpha1 < 2 with (4 alpha1 + 1)/3 < alpha2 < 2 alpha1, "
         "or alpha1 > 2 with alpha1 < alpha2 < (4 alpha1 + 1)/3",
         lambda p: (0.5 < p["alpha1"] < 2 and (4 * p["alpha1"] + 1) / 3 < p["alpha2"] < 2 * p["alpha1"])
         or (p["alpha1"] > 2 and p["alpha1"] < p["alpha2"] < (4 * p["alpha1"] + 1) / 3)),
    ),
}


def _g7_rules() -> tuple[Rule, ...]:
    return (
        ("rho_o > 0", lambda p: p["rho_o"] > 0),
        ("p_o > 0", lambda p: p["p_o"] > 0),
        ("Z_o != 0", lambda p: p["Z_o"] != 0),
        ("E_o > 0", lambda p: p["E_o"] > 0),
        ("delta_o != 0", lambda p: p["delta_o"] != 0),
        ("delta_o^2 <= E_o^2/rho_o", lambda p: p["delta_o"] ** 2 <= p["E_o"] ** 2 / p["rho_o"]),
    )


def _g8_rules() -> tuple[Rule, ...]:
    return (
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("W_o > 0", lambda p: p["W_o"] > 0),
        ("alpha != 0", lambda p: p["alpha"] != 0),
        ("beta > 0", lambda p: p["beta"] > 0),
        # the induction equation holds only on this surface (residual
        # proportional to alpha beta X_o - alpha Y_o + Z_o)
        ("Z_o = alpha (Y_o - beta X_o)",
         lambda p: abs(p["Z_o"] - p["alpha"] * (p["Y_o"] - p["beta"] * p["X_o"]))
         <= 1e-12 * max(1.0, abs(p["Z_o"]))),
        ("R_o > [W_o + beta U_o + alpha V_o]^2/(2 beta W_o)",
         lambda p: p["R_o"] > (p["W_o"] + p["beta"] * p["U_o"] + p["alpha"] * p["V_o"]) ** 2
         / (2 * p["beta"] * p["W_o"])),
    )


def _g9_rules() -> tuple[Rule, ...]:
    return (
        ("beta > 0", lambda p: p["beta"] > 0),
        ("-3/4 < alpha < -1/2", lambda p: -0.75 < p["alpha"] < -0.5),
        ("Y_o^2 + Z_o^2 > 0", lambda p: p["Y_o"] ** 2 + p["Z_o"] ** 2 > 0),
    )


def _g10_rules(case: str) -> tuple[Rule, ...]:
    rules: list[Rule] = [
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("Z_o != 0", lambda p: p["Z_o"] != 0),
    ]
    if case in ("case1", "general"):
        rules.append(("R_o > 0", lambda p: p["R_o"] > 0))
    return tuple(rules)


def _g4_rules() -> tuple[Rule, ...]:
    return (
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("alpha1 not in {0, 1}", lambda p: p["alpha1"] not in (0.0, 1.0)),
        ("c_o != 0", lambda p: p["c_o"] != 0),
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("R_1 >= 0", lambda p: p["R_1"] >= 0),
    )


def _cyl_rules(need_alpha1_nonzero: bool) -> tuple[Rule, ...]:
    rules: list[Rule] = [
        ("A_o > 0", lambda p: p["A_o"] > 0),
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("R_1 >= 0", lambda p: p["R_1"] >= 0),
    ]
    if need_alpha1_nonzero:
        rules.append(("alpha1 != 0", lambda p: p["alpha1"] != 0))
    return tuple(rules)


def _g5_rules() -> tuple[Rule, ...]:
    return _cyl_rules(False) + (("X_o != 0 (beta_o definition)", lambda p: p["X_o"] != 0),)


def _g6_rules() -> tuple[Rule, ...]:
    return _cyl_rules(True) + (("X_o != 0 (beta_o definition)", lambda p: p["X_o"] != 0),)


def _g3_general_rules() -> tuple[Rule, ...]:
    return (
        ("R_o > 0", lambda p: p["R_o"] > 0),
        ("alpha1 != 0", lambda p: p["alpha1"] != 0),
    )


PARAM_SPECS: dict[str, ParamSpec] = {
    "G1/gamma=1": ParamSpec(
        {"alpha": 0.5, "A_o": 0.3, "R_o": 1.0, "U_o": 0.7, "X_o": 0.6, "W_o": 0.4, "theta_o": 1.3},
        _g1_rules("gamma=1"), {"gamma": 1.0}),
    "G1/gamma=2": ParamSpec(
        {"alpha": 0.5, "A_o": 0.3, "R_o": 1.0, "U_o": 0.7, "X_o": 0.6, "W_o": 0.4, "theta_o": 1.3},
        _g1_rules("gamma=2"), {"gamma": 2.0}),
    "G1/generic": ParamSpec(
        {"alpha": 0.5, "A_o": 0.3, "R_o": 1.0, "U_o": 0.7, "X_o": 0.6, "W_o": 0.4, "theta_o": 1.3,
         "gamma": 5.0 / 3.0},
        _g1_rules("generic")),
    "G2/gamma=3/2": ParamSpec(
        {"alpha1": 1.5, "alpha2": 0.8, "A_o": 0.4, "R_o": 1.0, "U_o": 0.3, "X_o": 0.5, "W_o": 0.2,
         "theta_o": 0.1},
        _g2_rules("gamma=3/2"), {"gamma": 1.5}),
    "G2/gamma=2": ParamSpec(
        {"alpha1": 1.5, "alpha2": 0.8, "A_o": 0.4, "R_o": 1.0, "U_o": 0.3, "X_o": 0.5, "W_o": 0.2,
         "theta_o": 0.1},
        _g2_rules("gamma=2"), {"gamma": 2.0}),
    "G2/generic": ParamSpec(
        {"alpha1": 1.5, "alpha2": 0.8, "A_o": 0.4, "R_o": 1.0, "U_o": 0.3, "X_o": 0.5, "W_o": 0.2,
         "theta_o": 0.1, "gamma": 5.0 / 3.0, "R_int0": 0.0},
        _g2_rules("generic")),
    "G3/case1": ParamSpec(
        {"alpha1": 1.5, "R_o": 1.0, "U_o": 0.4, "X_o": 0.5, "C_2": 1.0, "theta_o": 0.2},
        _G3_CASE_RULES["case1"], {"gamma": 4.0 / 3.0}),
    "G3/case2": ParamSpec(
        {"alpha2": 1.7, "R_o": 1.0, "A_o": 0.5, "U_o": 0.4, "X_o": 0.5, "C_2": 1.0, "theta_o": 0.2},
        _G3_CASE_RULES["case2"], {"alpha1": 1.0}),
    "G3/case3": ParamSpec(
        {"alpha2": 1.5, "A_o": 0.5, "U_o": 0.4, "X_o": 0.5, "C_2": 1.0, "theta_o": 0.2},
        _G3_CASE_RULES["case3"], {"alpha1": 1.0, "gamma": 4.0 / 3.0}),
    "G3/case4": ParamSpec(
        {"alpha1": 0.75, "alpha2": 1.4, "R_o": 1.0, "U_o": 0.4, "C_2": 1.0, "theta_o": 0.2},
        _G3_CASE_RULES["case4"]),
    "G3/case5": ParamSpec(
        {"alpha1": 1.5, "alpha2": 2.6, "R_o": 1.0, "U_o": 0.4, "C_2": 1.0, "theta_o": 0.2},
        _G3_CASE_RULES["case5"]),
    "G3/general": ParamSpec(
        {"alpha1": 1.5, "alpha2": 2.5, "A_o": 0.3, "R_o": 1.0, "U_o": 0.4, "X_o": 0.5,
         "theta_o": 0.2, "gamma": 4.0 / 3.0, "W0": 1.0, "s0": 0.0},
        _g3_general_rules()),
    "G4": ParamSpec(
        {"alpha1": 0.5, "A_o": 2.0, "c_o": 1.0, "W_o": 0.7, "Y_o": 0.6, "Z_o": 0.4,
         "R_o": 1.0, "R_1": 0.3, "gamma": 5.0 / 3.0},
        _g4_rules(), {"alpha2": -1.0}),
    "G5": ParamSpec(
        {"alpha1": 0.4, "alpha2": 0.3, "A_o": 0.5, "W_o": 0.6, "X_o": 0.8, "Z_o": 0.5,
         "R_o": 1.0, "R_1": 0.2, "Y0": 0.2, "r0": 1.0, "const_density": 0.0, "gamma": 5.0 / 3.0},
        _g5_rules()),
    "G6": ParamSpec(
        {"alpha1": 0.3, "alpha2": 0.2, "A_o": 0.5, "W_o": 0.6, "X_o": 0.8, "Z_o": 0.5,
         "R_o": 1.0, "R_1": 0.2, "Y0": 0.2, "s0": 1.0, "const_density": 0.0,
         "gamma": 5.0 / 3.0},
        _g6_rules()),
    "G6/alpha2=0": ParamSpec(
        {"alpha1": 0.3, "A_o": 0.5, "W_o": 0.6, "X_o": 0.8, "Z_o": 0.5, "Y_o": 0.2,
         "R_o": 1.0, "R_1": 0.2, "gamma": 5.0 / 3.0},
        _cyl_rules(True), {"alpha2": 0.0}),
    "G7": ParamSpec(
        {"rho_o": 1.3, "p_o": 1.0, "W_o": 0.4, "Z_o": 0.9, "E_o": 1.0, "delta_o": 0.5,
         "phi_o": 0.3, "V_o": 0.2, "gamma": 5.0 / 3.0},
        _g7_rules()),
    "G8": ParamSpec(
        {"alpha": 0.7, "beta": 1.2, "A_o": 0.5, "W_o": 0.8, "U_o": 0.3, "V_o": 0.4,
         "X_o": 0.5, "Y_o": 0.9, "Z_o": 0.21, "R_o": 3.0, "gamma": 5.0 / 3.0},
        _g8_rules()),
    "G9": ParamSpec(
        {"alpha": -0.6, "beta": 1.0, "C_2": 2.0, "C_3": 0.5, "V_o": 0.3, "Y_o": 0.5, "Z_o": 0.7},
        _g9_rules(), {"gamma": 3.0}),
    "G10/case1": ParamSpec(
        {"R_o": 1.0, "A_o": 0.5, "U_o": 0.2, "V_o": 0.3, "X_o": 0.4, "Y_o": 0.5, "Z_o": 0.6,
         "C_2": 2.0},
        _g10_rules("case1"), {"gamma": 4.0 / 3.0}),
    "G10/case2": ParamSpec(
        {"A_o": 0.5, "U_o": 0.2, "V_o": 0.3, "X_o": 0.4, "Y_o": 0.5, "Z_o": 0.6, "C_2": 2.0},
        _g10_rules("case2"), {"gamma": 5.0 / 4.0}),
    "G10/general": ParamSpec(
        {"R_o": 1.0, "A_o": 0.5, "U_o": 0.2, "V_o": 0.3, "X_o": 0.4, "Y_o": 0.5, "Z_o": 0.6,
         "gamma": 4.0 / 3.0, "W0": 2.0, "z0": 0.0},
        _g10_rules("general")),
}

# Sub-case ids that are pure aliases of the family group they belong to.
FAMILY_GROUPS = ("G1", "G2", "G3", "G4", "G5", "G6", "G7", "G8", "G9", "G10")


def family_group(family_id: str) -> str:
    return family_id.split("/", 1)[0]


def validate_params(family_id: str, raw_params: Mapping[str, Any] | None = None,
                    config: MhdConfig | None = None) -> dict[str, float]:
    """Merge ``raw_params`` over the family defaults and check every constraint.

    Returns the complete parameter dict (fixed values included).  Raises
    ``ConstraintError`` naming *all* violated constraints, unknown
    parameter names, non-finite values and attempts to override values the
    family fixes (e.g. gamma in a gamma-branch).
    """
    try:
        spec = PARAM_SPECS[family_id]
    except KeyError:
        raise MhdLabError(f"unknown family id {family_id!r}") from None
    raw = dict(raw_params or {})
    failures: list[str] = []
    params: dict[str, float] = dict(spec.defaults)
    if "gamma" in spec.defaults and "gamma" not in raw and config is not None:
        params["gamma"] = config.gamma
    for key, value in raw.items():
        if key in spec.fixed:
            if float(value) != spec.fixed[key]:
                failures.append(f"{key} is fixed to {spec.fixed[key]!r} in {family_id}")
            continue
        if key not in params:
            failures.append(f"unknown parameter {key!r}")
            continue
        try:
            params[key] = float(value)
        except (TypeError, ValueError):
            failures.append(f"{key} is not a number: {value!r}")
            continue
        if not math.isfinite(params[key]):
            failures.append(f"{key} must be finite")
    params.update(spec.fixed)
    if not failures:
        for name, pred in spec.rules:
            try:
                ok = bool(pred(params))
            except (KeyError, ZeroDivisionError, ValueError, OverflowError):
                ok = False
            if not ok:
                failures.append(name)
    if failures:
        raise ConstraintError(family_id, failures)
    return params
