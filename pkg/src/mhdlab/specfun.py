"""Special functions: real Gauss hypergeometric 2F1 and a flagged artanh."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, rgamma

from .core import DomainError, MhdLabError

_EPS = np.finfo(float).eps
_MAX_TERMS = 20000


class PoleError(MhdLabError, ValueError):
    """Lower parameter c of 2F1 is a non-positive integer."""


class SingularityError(DomainError):
    """artanh evaluated at +-1."""


@dataclass(frozen=True)
class Hyp2F1Args:
    a: float
    b: float
    c: float
    z: float


@dataclass(frozen=True)
class Hyp2F1Result:
    value: float
    # magnitude of the first omitted term of the last series summed
    truncation_bound: float
    method: str


def _is_nonpos_int(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def _series(a, b, c, z):
    """Plain Gauss series; returns (sum, size of first neglected term)."""
    term = 1.0
    total = 1.0
    n = 0
    while n < _MAX_TERMS:
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        n += 1
        if term == 0.0:
            return total, 0.0
        if abs(term) <= _EPS * abs(total) * 0.25 and n > 2:
            nxt = abs(term * (a + n) * (b + n) / ((c + n) * (n + 1)) * z)
            return total, nxt
    raise MhdLabError(f"2F1 series did not converge for a={a}, b={b}, c={c}, z={z}")


def _gratio(num, den):
    """prod Gamma(num) / prod Gamma(den) with signs, zero on reciprocal poles."""
    out = 1.0
    for d in den:
        out *= rgamma(d)
    if out == 0.0:
        return 0.0
    logmag = 0.0
    sign = 1.0
    for v in num:
        logmag += gammaln(v)
        sign *= _gamma_sign(v)
    return sign * math.exp(logmag) * out


def _gamma_sign(v):
    if v > 0 or float(v).is_integer():
        return 1.0
    return -1.0 if math.floor(v) % 2 else 1.0


def _one_minus_z(a, b, c, w):
    """2F1(a, b; c; w) for w close to 1 by the connection to 1 - w."""
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        # terminating series; the connection coefficients sit on Gamma poles
        return _series(a, b, c, w)
    m_real = c - a - b
    u = 1.0 - w
    m = round(m_real)
    if abs(m_real - m) > 1e-9:
        f1, e1 = _series(a, b, a + b - c + 1, u)
        f2, e2 = _series(c - a, c - b, c - a - b + 1, u)
        k1 = _gratio([c, c - a - b], [c - a, c - b])
        k2 = _gratio([c, a + b - c], [a, b])
        return k1 * f1 + u ** (c - a - b) * k2 * f2, abs(k1) * e1 + abs(k2) * e2
    if m >= 0:
        return _log_case_pos(a, b, m, u)
    return _log_case_neg(a, b, -m, u)


def _log_case_pos(a, b, m, u):
    # c = a + b + m, m = 0, 1, 2, ...
    c = a + b + m
    head = 0.0
    if m > 0:
        pref = math.gamma(m) * _gratio([c], [a + m, b + m])
        term = 1.0
        for n in range(m):
            if n > 0:
                term *= (a + n - 1) * (b + n - 1) / (n * (n - m)) * u
            head += term
        head *= pref
    pref2 = (-u) ** m * _gratio([c], [a, b])
    if pref2 == 0.0:
        return head, 0.0
    lnu = math.log(u)
    tail = 0.0
    coef = 1.0 / math.factorial(m)
    n = 0
    bound = 0.0
    while n < _MAX_TERMS:
        bracket = lnu - digamma(n + 1) - digamma(n + m + 1) + digamma(a + n + m) + digamma(b + n + m)
        t = coef * bracket
        tail += t
        coef *= (a + m + n) * (b + m + n) / ((n + 1) * (n + m + 1)) * u
        n += 1
        if abs(t) <= _EPS * max(abs(tail), 1e-300) * 0.25 and n > 3:
            bound = abs(coef)
            break
    return head - pref2 * tail, abs(pref2) * bound


def _log_case_neg(a, b, m, u):
    # c = a + b - m, m = 1, 2, ...
    c = a + b - m
    pref = math.gamma(m) * _gratio([c], [a, b]) * u ** (-m)
    head = 0.0
    term = 1.0
    for n in range(m):
        if n > 0:
            term *= (a - m + n - 1) * (b - m + n - 1) / (n * (n - m)) * u
        head += term
    head *= pref
    pref2 = (-1) ** m * _gratio([c], [a - m, b - m])
    if pref2 == 0.0:
        return head, 0.0
    lnu = math.log(u)
    tail = 0.0
    coef = 1.0 / math.factorial(m)
    n = 0
    bound = 0.0
    while n < _MAX_TERMS:
        bracket = lnu - digamma(n + 1) - digamma(n + m + 1) + digamma(a + n) + digamma(b + n)
        t = coef * bracket
        tail += t
        coef *= (a + n) * (b + n) / ((n + 1) * (n + m + 1)) * u
        n += 1
        if abs(t) <= _EPS * max(abs(tail), 1e-300) * 0.25 and n > 3:
            bound = abs(coef)
            break
    return head - pref2 * tail, abs(pref2) * bound


def hyp2f1_detail(a: float, b: float, c: float, z: float) -> Hyp2F1Result:
    """2F1 with the method used and a truncation bound.

    Regions: direct series for |z| <= 1/2; Pfaff's transformation
    ``z -> z/(z-1)`` otherwise.  When the transformed argument exceeds
    0.9 the 1 - w connection formula is applied, with the logarithmic
    forms when c - a - b is an integer.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpos_int(c):
        raise PoleError(f"2F1 lower parameter c={c} is a non-positive integer")
    if not z < 1.0:
        raise DomainError(f"2F1 real branch requires z < 1 (got z={z})")
    if z == 0.0 or a == 0.0 or b == 0.0:
        return Hyp2F1Result(1.0, 0.0, "trivial")
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        val, _ = _series(a, b, c, z)
        return Hyp2F1Result(val, 0.0, "polynomial")
    if abs(z) <= 0.5:
        val, err = _series(a, b, c, z)
        return Hyp2F1Result(val, err, "series")
    if z < 0:
        # Pfaff: (1 - z)^-a 2F1(a, c - b; c; z/(z - 1)), argument in (1/3, 1)
        w = z / (z - 1.0)
        pre = (1.0 - z) ** (-a)
        bb = c - b
        if w <= 0.9:
            val, err = _series(a, bb, c, w)
            return Hyp2F1Result(pre * val, abs(pre) * err, "pfaff-series")
        val, err = _one_minus_z(a, bb, c, w)
        return Hyp2F1Result(pre * val, abs(pre) * err, "pfaff-connection")
    if z <= 0.9:
        # Pfaff would map this interval outside the unit disc
        val, err = _series(a, b, c, z)
        return Hyp2F1Result(val, err, "series")
    val, err = _one_minus_z(a, b, c, z)
    return Hyp2F1Result(val, err, "connection")


def hyp2f1(a, b, c, z):
    """Real Gauss hypergeometric function, vectorised over ``z``."""
    zz = np.asarray(z, dtype=float)
    if zz.ndim == 0:
        return hyp2f1_detail(a, b, c, float(zz)).value
    out = np.empty(zz.shape)
    for idx, zi in np.ndenumerate(zz):
        out[idx] = hyp2f1_detail(a, b, c, float(zi)).value
    return out


@dataclass(frozen=True)
class ArtanhResult:
    value: float
    principal_real_part: bool


def artanh_detail(x: float) -> ArtanhResult:
    """Inverse hyperbolic tangent.

    For |x| > 1 the principal value is complex; its real part
    ``0.5 * ln((x + 1)/(x - 1))`` is returned with the flag set.
    """
    x = float(x)
    if abs(x) == 1.0:
        raise SingularityError(f"artanh is singular at x={x}")
    if abs(x) < 1.0:
        return ArtanhResult(math.atanh(x), False)
    return ArtanhResult(0.5 * math.log((x + 1.0) / (x - 1.0)), True)


def artanh(x):
    """Vectorised real branch / principal real part of artanh (see artanh_detail)."""
    xx = np.asarray(x, dtype=float)
    if np.any(np.abs(xx) == 1.0):
        raise SingularityError("artanh is singular at x = +-1")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(xx) < 1.0, np.arctanh(np.clip(xx, -0.999999999999999, 0.999999999999999)),
                       0.5 * np.log(np.abs((xx + 1.0) / (xx - 1.0))))
    return out if out.ndim else float(out)


def safe_pow(base, exponent, name: str = "base"):
    """Real power requiring a positive base."""
    b = np.asarray(base, dtype=float)
    if np.any(b <= 0):
        raise DomainError(f"{name} must be positive for a real power (min {b.min()!r})")
    return b**exponent


def safe_log(arg, name: str = "argument"):
    a = np.asarray(arg, dtype=float)
    if np.any(a <= 0):
        raise DomainError(f"log {name} must be positive (min {a.min()!r})")
    return np.log(a)
