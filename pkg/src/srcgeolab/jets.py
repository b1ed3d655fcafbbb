"""Forward-mode differentiation with truncated Taylor values.

A ``Jet`` generalizes dual numbers: it carries a value together with the
derivative tensors d1, d2, d3 with respect to ``m`` seed directions,
truncated at the requested order.  All components are numpy arrays (any
leading batch shape) with the derivative axes trailing, so one evaluation
of a scalar expression yields the full gradient/Hessian/third-derivative
tensor at every batch point simultaneously.

Metric field callbacks stay differentiable by using the math shims
(``sqrt``, ``exp``, ...) from this module instead of ``numpy`` directly;
on plain floats/arrays the shims fall through to numpy.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet",
    "seed",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "arctan",
]


def _pad(a, k):
    """Append k singleton axes so batch values broadcast against derivative axes."""
    return np.asarray(a)[(...,) + (None,) * k]


def _outer11(a, b):
    return np.einsum("...i,...j->...ij", a, b)


def _sym12(d2, d1):
    """Symmetrized product d2[ij] * d1[k] over the three index slots."""
    return (
        np.einsum("...ij,...k->...ijk", d2, d1)
        + np.einsum("...ik,...j->...ijk", d2, d1)
        + np.einsum("...jk,...i->...ijk", d2, d1)
    )


class Jet:
    """Truncated Taylor value of order 1, 2, or 3 in m seed directions."""

    __slots__ = ("val", "d1", "d2", "d3", "order")

    def __init__(self, val, d1, d2=None, d3=None):
        self.val = val
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3
        self.order = 3 if d3 is not None else (2 if d2 is not None else 1)

    # keep numpy from consuming Jet operands elementwise
    __array_ufunc__ = None
    __array_priority__ = 1000

    def __repr__(self):
        return f"Jet(order={self.order}, val={self.val!r})"

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            d2 = None if self.d2 is None else self.d2 + other.d2
            d3 = None if self.d3 is None else self.d3 + other.d3
            return Jet(self.val + other.val, self.d1 + other.d1, d2, d3)
        return Jet(self.val + other, self.d1, self.d2, self.d3)

    __radd__ = __add__

    def __neg__(self):
        d2 = None if self.d2 is None else -self.d2
        d3 = None if self.d3 is None else -self.d3
        return Jet(-self.val, -self.d1, d2, d3)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return self + (-other)
        return Jet(self.val - other, self.d1, self.d2, self.d3)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            d2 = None if self.d2 is None else self.d2 * _pad(other, 2)
            d3 = None if self.d3 is None else self.d3 * _pad(other, 3)
            return Jet(self.val * other, self.d1 * _pad(other, 1), d2, d3)
        f, g = self, other
        val = f.val * g.val
        d1 = f.d1 * _pad(g.val, 1) + _pad(f.val, 1) * g.d1
        if f.d2 is None:
            return Jet(val, d1)
        cross = _outer11(f.d1, g.d1)
        d2 = (
            f.d2 * _pad(g.val, 2)
            + _pad(f.val, 2) * g.d2
            + cross
            + np.swapaxes(cross, -1, -2)
        )
        if f.d3 is None:
            return Jet(val, d1, d2)
        d3 = (
            f.d3 * _pad(g.val, 3)
            + _pad(f.val, 3) * g.d3
            + _sym12(f.d2, g.d1)
            + _sym12(g.d2, f.d1)
        )
        return Jet(val, d1, d2, d3)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, Jet):
            raise TypeError("Jet exponents are not supported")
        if isinstance(k, int) and 0 <= k <= 4:
            if k == 0:
                return Jet(np.ones_like(np.asarray(self.val)), np.zeros_like(self.d1),
                           None if self.d2 is None else np.zeros_like(self.d2),
                           None if self.d3 is None else np.zeros_like(self.d3))
            out = self
            for _ in range(k - 1):
                out = out * self
            return out
        u = np.asarray(self.val)
        return self._chain(
            u ** k,
            k * u ** (k - 1),
            k * (k - 1) * u ** (k - 2),
            k * (k - 1) * (k - 2) * u ** (k - 3),
        )

    # -- chain rule -------------------------------------------------------

    def _chain(self, f0, f1, f2=None, f3=None):
        """Compose an elementary function given its derivatives at self.val."""
        d1 = _pad(f1, 1) * self.d1
        if self.d2 is None:
            return Jet(f0, d1)
        d2 = _pad(f2, 2) * _outer11(self.d1, self.d1) + _pad(f1, 2) * self.d2
        if self.d3 is None:
            return Jet(f0, d1, d2)
        d3 = (
            _pad(f3, 3) * np.einsum("...i,...j,...k->...ijk", self.d1, self.d1, self.d1)
            + _pad(f2, 3) * _sym12(self.d2, self.d1)
            + _pad(f1, 3) * self.d3
        )
        return Jet(f0, d1, d2, d3)

    def _reciprocal(self):
        u = np.asarray(self.val)
        inv = 1.0 / u
        inv2 = inv * inv
        return self._chain(inv, -inv2, 2.0 * inv2 * inv, -6.0 * inv2 * inv2)


def seed(values, m, order=2, offset=0):
    """Turn components into independent Jet variables.

    values: sequence of scalars/arrays treated as coordinates; variable i
    is seeded along direction offset+i of the m available directions.
    """
    out = []
    zeros2 = np.zeros((m, m)) if order >= 2 else None
    zeros3 = np.zeros((m, m, m)) if order >= 3 else None
    for i, v in enumerate(values):
        d1 = np.zeros(m)
        d1[offset + i] = 1.0
        out.append(Jet(np.asarray(v, dtype=float), d1, zeros2, zeros3))
    return out


def _dispatch(x, np_fn, chain_builder):
    if isinstance(x, Jet):
        return chain_builder(x)
    return np_fn(x)


def sqrt(x):
    def build(j):
        s = np.sqrt(np.asarray(j.val))
        inv = 0.5 / s
        return j._chain(s, inv, -0.5 * inv / j.val, 0.75 * inv / (j.val * j.val))

    return _dispatch(x, np.sqrt, build)


def exp(x):
    def build(j):
        e = np.exp(np.asarray(j.val))
        return j._chain(e, e, e, e)

    return _dispatch(x, np.exp, build)


def log(x):
    def build(j):
        u = np.asarray(j.val)
        inv = 1.0 / u
        return j._chain(np.log(u), inv, -inv * inv, 2.0 * inv ** 3)

    return _dispatch(x, np.log, build)


def sin(x):
    def build(j):
        s, c = np.sin(j.val), np.cos(j.val)
        return j._chain(s, c, -s, -c)

    return _dispatch(x, np.sin, build)


def cos(x):
    def build(j):
        s, c = np.sin(j.val), np.cos(j.val)
        return j._chain(c, -s, -c, s)

    return _dispatch(x, np.cos, build)


def arctan(x):
    def build(j):
        u = np.asarray(j.val)
        w = 1.0 / (1.0 + u * u)
        return j._chain(np.arctan(u), w, -2.0 * u * w * w,
                        (6.0 * u * u - 2.0) * w ** 3)

    return _dispatch(x, np.arctan, build)
