"""Second-order truncated Taylor jets and the vector calculus built on them.

A :class:`Jet` carries the value, gradient and Hessian of a scalar with
respect to ``n`` seed variables (``n = 4`` for (t, x, y, z)).  Jets are
batched: ``val`` has an arbitrary shape ``S``, ``grad`` has shape
``S + (n,)`` and ``hess`` has shape ``S + (n, n)``, so a whole cloud of
sample points is differentiated with one pass of numpy arithmetic.

Closed-form field maps are written once against the elementary functions
defined here (``exp``, ``sin``, ...).  Those dispatch on their argument:
plain floats and arrays go to numpy, jets go through the chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import MhdState

T, X, Y, Z = 0, 1, 2, 3


class Jet:
    """Value, gradient and Hessian of a scalar, batched over points."""

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100.0

    def __init__(self, val, grad, hess):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @property
    def nvars(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.val.shape

    def __repr__(self) -> str:
        return f"Jet(val={self.val!r}, grad={self.grad!r})"

    @classmethod
    def constant(cls, value, like: "Jet") -> "Jet":
        v = np.broadcast_to(np.asarray(value, dtype=float), like.shape)
        return cls(v, np.zeros(v.shape + (like.nvars,)), np.zeros(v.shape + (like.nvars, like.nvars)))

    @classmethod
    def variable(cls, value, index: int, nvars: int = 4) -> "Jet":
        v = np.asarray(value, dtype=float)
        g = np.zeros(v.shape + (nvars,))
        g[..., index] = 1.0
        return cls(v, g, np.zeros(v.shape + (nvars, nvars)))

    def _lift(self, f0, f1, f2) -> "Jet":
        """Apply a univariate function given its value and two derivatives here."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        g = self.grad
        hess = f1[..., None, None] * self.hess + f2[..., None, None] * (g[..., :, None] * g[..., None, :])
        return Jet(f0, f1[..., None] * g, hess)

    # arithmetic ---------------------------------------------------------
    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        o = np.asarray(other, dtype=float)
        return Jet(self.val + o, self.grad + np.zeros(o.shape + (1,)), self.hess + np.zeros(o.shape + (1, 1)))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            av, bv = a.val[..., None], b.val[..., None]
            grad = a.grad * bv + b.grad * av
            cross = a.grad[..., :, None] * b.grad[..., None, :]
            hess = a.hess * bv[..., None] + b.hess * av[..., None] + cross + np.swapaxes(cross, -1, -2)
            return Jet(a.val * b.val, grad, hess)
        o = np.asarray(other, dtype=float)
        return Jet(self.val * o, self.grad * o[..., None], self.hess * o[..., None, None])

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.val
        return self._lift(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, Jet):
            return exp(k * log(self))
        k = float(k)
        if k == 0.0:
            return Jet.constant(1.0, self)
        if k == 1.0:
            return self
        if k == 2.0:
            return self * self
        v = self.val
        return self._lift(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def __rpow__(self, base):
        return exp(self * np.log(base))

    # comparisons act on the value only, used for branch selection
    def __lt__(self, other):
        return self.val < _v(other)

    def __gt__(self, other):
        return self.val > _v(other)

    def d(self, i: int) -> np.ndarray:
        """First partial derivative along seed variable ``i``."""
        return self.grad[..., i]

    def dd(self, i: int, j: int) -> np.ndarray:
        return self.hess[..., i, j]

    def slot_jet(self, i: int) -> "Jet":
        """The first partial along ``i`` as a first-order-exact jet.

        Its gradient is the ``i``-th Hessian row; its Hessian is unknown
        at this truncation order and is filled with NaN so accidental use
        is visible.
        """
        return Jet(self.grad[..., i], self.hess[..., i, :],
                   np.full(self.hess.shape, np.nan))


def _v(x):
    return x.val if isinstance(x, Jet) else x


def value(x):
    """Strip derivative information."""
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)


# elementary functions with numpy / jet dispatch -----------------------------

def exp(u):
    if isinstance(u, Jet):
        e = np.exp(u.val)
        return u._lift(e, e, e)
    return np.exp(u)


def log(u):
    if isinstance(u, Jet):
        v = u.val
        return u._lift(np.log(v), 1.0 / v, -1.0 / v**2)
    return np.log(u)


def sqrt(u):
    if isinstance(u, Jet):
        s = np.sqrt(u.val)
        return u._lift(s, 0.5 / s, -0.25 / (s * u.val))
    return np.sqrt(u)


def sin(u):
    if isinstance(u, Jet):
        s, c = np.sin(u.val), np.cos(u.val)
        return u._lift(s, c, -s)
    return np.sin(u)


def cos(u):
    if isinstance(u, Jet):
        s, c = np.sin(u.val), np.cos(u.val)
        return u._lift(c, -s, -c)
    return np.cos(u)


def tan(u):
    if isinstance(u, Jet):
        tv = np.tan(u.val)
        sec2 = 1.0 + tv**2
        return u._lift(tv, sec2, 2.0 * tv * sec2)
    return np.tan(u)


def cot(u):
    return cos(u) / sin(u)


def csc(u):
    return 1.0 / sin(u)


def arctan(u):
    if isinstance(u, Jet):
        v = u.val
        q = 1.0 / (1.0 + v**2)
        return u._lift(np.arctan(v), q, -2.0 * v * q**2)
    return np.arctan(u)


def arccos(u):
    if isinstance(u, Jet):
        v = u.val
        w = 1.0 - v**2
        return u._lift(np.arccos(v), -1.0 / np.sqrt(w), -v / w**1.5)
    return np.arccos(u)


def arctan2(yy, xx):
    """Polar angle in (-pi, pi]; derivatives are those of the smooth angle."""
    if not (isinstance(yy, Jet) or isinstance(xx, Jet)):
        return np.arctan2(yy, xx)
    like = yy if isinstance(yy, Jet) else xx
    xj, yj = as_jet(xx, like), as_jet(yy, like)
    xv, yv = xj.val, yj.val
    r2 = xv**2 + yv**2
    fx, fy = -yv / r2, xv / r2
    fxx = 2 * xv * yv / r2**2
    fxy = (yv**2 - xv**2) / r2**2
    gx, gy = xj.grad, yj.grad
    outer = lambda a, b: a[..., :, None] * b[..., None, :]  # noqa: E731
    grad_ = fx[..., None] * gx + fy[..., None] * gy
    hess = (fx[..., None, None] * xj.hess + fy[..., None, None] * yj.hess
            + fxx[..., None, None] * (outer(gx, gx) - outer(gy, gy))
            + fxy[..., None, None] * (outer(gx, gy) + outer(gy, gx)))
    return Jet(np.arctan2(yv, xv), grad_, hess)


def lift(u, f0, f1, f2):
    """Compose ``u`` with a univariate function known through f, f', f''.

    For plain inputs only ``f0`` is returned.
    """
    if isinstance(u, Jet):
        return u._lift(f0, f1, f2)
    return np.asarray(f0, dtype=float)


def where(cond, a, b):
    cond = np.asarray(cond)
    if isinstance(a, Jet) or isinstance(b, Jet):
        like = a if isinstance(a, Jet) else b
        a = a if isinstance(a, Jet) else Jet.constant(a, like)
        b = b if isinstance(b, Jet) else Jet.constant(b, like)
        return Jet(np.where(cond, a.val, b.val), np.where(cond[..., None], a.grad, b.grad),
                   np.where(cond[..., None, None], a.hess, b.hess))
    return np.where(cond, a, b)


# seeding and evaluation -----------------------------------------------------

FieldMap = Callable[..., MhdState]


def seed(t, x, y, z) -> tuple[Jet, Jet, Jet, Jet]:
    """Independent-variable jets for (t, x, y, z), broadcast to a common shape."""
    t, x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (t, x, y, z)))
    return tuple(Jet.variable(c, i) for i, c in enumerate((t, x, y, z)))


def as_jet(u, like: Jet) -> Jet:
    return u if isinstance(u, Jet) else Jet.constant(u, like)


@dataclass(frozen=True)
class FieldJet:
    """Jets of rho, p, v and B at a batch of points."""

    rho: Jet
    p: Jet
    v: tuple[Jet, Jet, Jet]
    B: tuple[Jet, Jet, Jet]

    @property
    def shape(self):
        return self.rho.shape


def jet_eval(field_map: FieldMap, t, x, y, z) -> FieldJet:
    """Evaluate a field map ``(t, x, y, z) -> MhdState`` on seeded jets.

    Components the map returns as plain numbers (e.g. ``B3 = 0``) are
    promoted to constant jets.
    """
    jt, jx, jy, jz = seed(t, x, y, z)
    st = field_map(jt, jx, jy, jz)
    lk = jt
    return FieldJet(as_jet(st.rho, lk), as_jet(st.p, lk),
                    tuple(as_jet(c, lk) for c in st.v), tuple(as_jet(c, lk) for c in st.B))


# vector calculus on jet 3-vectors ------------------------------------------
# A "vector" is a 3-tuple of Jets; the spatial slots are grad indices 1..3.

Vec = tuple


def grad(f: Jet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (f.d(X), f.d(Y), f.d(Z))


def div(a: Vec) -> np.ndarray:
    return a[0].d(X) + a[1].d(Y) + a[2].d(Z)


def curl(a: Vec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (a[2].d(Y) - a[1].d(Z), a[0].d(Z) - a[2].d(X), a[1].d(X) - a[0].d(Y))


def curl_jet(a: Vec) -> tuple[Jet, Jet, Jet]:
    """Curl carried as first-order-exact jets (needs second derivatives of ``a``)."""
    d = lambda comp, i: comp.slot_jet(i)  # noqa: E731
    return (d(a[2], Y) - d(a[1], Z), d(a[0], Z) - d(a[2], X), d(a[1], X) - d(a[0], Y))


def directional(u: Vec, f: Jet) -> np.ndarray:
    """(u . grad) f with u given by values."""
    return value(u[0]) * f.d(X) + value(u[1]) * f.d(Y) + value(u[2]) * f.d(Z)


def convective(v: Vec, f):
    """d/dt = d/dt + (v . grad) applied to a scalar jet or a 3-tuple of jets."""
    if isinstance(f, Jet):
        return f.d(T) + directional(v, f)
    return tuple(c.d(T) + directional(v, c) for c in f)


def cross(a, b):
    a0, a1, a2 = a
    b0, b1, b2 = b
    return (a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0)


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vec_value(a) -> np.ndarray:
    """Stack a 3-tuple of jets/arrays into an array of shape ``S + (3,)``."""
    return np.stack(np.broadcast_arrays(*(value(c) for c in a)), axis=-1)


# finite-difference oracle ---------------------------------------------------

def richardson_partials(f: Callable, point, h: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of a scalar function of (t, x, y, z) by differences.

    Independent of the jet machinery: central differences at step ``h``
    and ``h/2`` combined by one Richardson step (fourth-order accurate).
    """
    p0 = np.asarray(point, dtype=float)

    def central(hh):
        g = np.zeros(4)
        H = np.zeros((4, 4))
        f0 = f(*p0)
        for i in range(4):
            e = np.zeros(4)
            e[i] = hh
            fp, fm = f(*(p0 + e)), f(*(p0 - e))
            g[i] = (fp - fm) / (2 * hh)
            H[i, i] = (fp - 2 * f0 + fm) / hh**2
            for j in range(i + 1, 4):
                e2 = np.zeros(4)
                e2[j] = hh
                H[i, j] = H[j, i] = (f(*(p0 + e + e2)) - f(*(p0 + e - e2))
                                     - f(*(p0 - e + e2)) + f(*(p0 - e - e2))) / (4 * hh**2)
        return g, H

    g1, H1 = central(h)
    g2, H2 = central(h / 2)
    return (4 * g2 - g1) / 3, (4 * H2 - H1) / 3
