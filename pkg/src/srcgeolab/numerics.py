"""Shared numerical helpers: quadrature, stencils, interpolation, fits."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson, simpson


def simpson_integral(y, s):
    return simpson(y, x=s, axis=0) if np.ndim(y) > 1 else float(simpson(y, x=s))


def simpson_weights(s):
    """Composite Simpson weights for a uniform grid with an even cell count."""
    s = np.asarray(s, dtype=float)
    n = len(s) - 1
    h = s[1] - s[0]
    if n % 2 != 0:
        raise ValueError("Simpson weights need an even number of cells")
    if not np.allclose(np.diff(s), h):
        raise ValueError("Simpson weights need a uniform grid")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def cumulative_integral(y, s):
    """Cumulative Simpson antiderivative sampled on the grid, starting at 0."""
    return cumulative_simpson(y, x=s, initial=0.0)


def fd_derivative(y, h, axis=0):
    """Fourth-order finite-difference derivative on a uniform grid.

    Interior: 5-point central stencil; first/last two samples use one-sided
    5-point stencils of the same order.
    """
    y = np.moveaxis(np.asarray(y, dtype=float), axis, 0)
    n = y.shape[0]
    if n < 5:
        raise ValueError("need at least 5 samples for the 4th-order stencil")
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)
    # one-sided: f'(x0) = (-25 f0 + 48 f1 - 36 f2 + 16 f3 - 3 f4) / 12h
    c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * h)
    d[0] = np.tensordot(c0, y[:5], axes=(0, 0))
    d[1] = np.tensordot(c1, y[:5], axes=(0, 0))
    d[-1] = -np.tensordot(c0, y[-5:][::-1], axes=(0, 0))
    d[-2] = -np.tensordot(c1, y[-5:][::-1], axes=(0, 0))
    return np.moveaxis(d, 0, axis)


def hermite_segment(theta, h, y0, y1, d0, d1):
    """Cubic Hermite value and derivative at fraction theta of a width-h cell.

    Shapes: theta (...,), values (..., k...) broadcastable after padding.
    """
    t = theta
    t2 = t * t
    t3 = t2 * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    val = (
        _pad_like(h00, y0) * y0
        + _pad_like(h10 * h, d0) * d0
        + _pad_like(h01, y1) * y1
        + _pad_like(h11 * h, d1) * d1
    )
    g00 = (6 * t2 - 6 * t) / h
    g10 = 3 * t2 - 4 * t + 1
    g01 = (-6 * t2 + 6 * t) / h
    g11 = 3 * t2 - 2 * t
    der = (
        _pad_like(g00, y0) * y0
        + _pad_like(g10, d0) * d0
        + _pad_like(g01, y1) * y1
        + _pad_like(g11, d1) * d1
    )
    return val, der


def _pad_like(coef, arr):
    coef = np.asarray(coef)
    extra = np.ndim(arr) - np.ndim(coef)
    return coef[(...,) + (None,) * extra] if extra > 0 else coef


def hermite_eval(s_grid, y, dy, s_query):
    """Evaluate a cubic Hermite interpolant (and derivative) on a uniform grid."""
    s_grid = np.asarray(s_grid)
    sq = np.atleast_1d(np.asarray(s_query, dtype=float))
    h = s_grid[1] - s_grid[0]
    idx = np.clip(((sq - s_grid[0]) / h).astype(int), 0, len(s_grid) - 2)
    theta = (sq - s_grid[idx]) / h
    val, der = hermite_segment(theta, h, y[idx], y[idx + 1], dy[idx], dy[idx + 1])
    if np.ndim(s_query) == 0:
        return val[0], der[0]
    return val, der


def one_sided_hausdorff(a, b) -> float:
    """Max distance from points of polyline a to the segments of polyline b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    seg0 = b[:-1]
    d = b[1:] - seg0
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd == 0.0, 1.0, dd)
    diff = a[:, None, :] - seg0[None, :, :]
    t = np.clip(np.einsum("psj,sj->ps", diff, d) / dd, 0.0, 1.0)
    proj = seg0[None, :, :] + t[..., None] * d[None, :, :]
    dist = np.linalg.norm(a[:, None, :] - proj, axis=-1)
    return float(dist.min(axis=1).max())


def polyline_hausdorff(p, q) -> float:
    """Symmetric Hausdorff distance between two polylines (points to segments)."""
    return max(one_sided_hausdorff(p, q), one_sided_hausdorff(q, p))


def loglog_fit(eps, values):
    """Least-squares fit log|values| = slope*log(eps) + b; returns (slope, e^b)."""
    eps = np.asarray(eps, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    coeffs = np.polyfit(np.log(eps), np.log(values), 1)
    return float(coeffs[0]), float(np.exp(coeffs[1]))
