"""Standard stationary Lorentzian data and the two correspondence maps.

The product representative on S x R is g((v,a),(v',b)) = h(v,v') -
(omega(v) - a)(omega(v') - b), whose matrix form at a point is the block
matrix [[h - omega x omega, omega], [omega^T, -1]].  The coordinate field
along the R factor is a unit timelike Killing field for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidStationaryError, NumericalError
from .finsler import (
    ChartDomain,
    OneFormField,
    RandersMetric,
    RiemannianField,
    _stack_matrix,
    _stack_vector,
    evaluate,
)


@dataclass(frozen=True)
class StationaryData:
    """Splitting data (g0, w, beta) of a standard stationary metric."""

    domain: ChartDomain
    g0: RiemannianField
    w: OneFormField
    beta: Callable

    @property
    def dim(self) -> int:
        return self.domain.dim


@dataclass(frozen=True)
class SpacetimeVector:
    """Tangent vector split into spatial part and dt-component."""

    spatial: np.ndarray
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "spatial", np.asarray(self.spatial, dtype=float))

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.spatial, [self.tau]])


class CausalClass(Enum):
    TIMELIKE_FUTURE = "timelike-future"
    TIMELIKE_PAST = "timelike-past"
    NULL_FUTURE = "null-future"
    NULL_PAST = "null-past"
    SPACELIKE = "spacelike"
    ZERO = "zero"


@dataclass(frozen=True)
class MetricMatrixField:
    """Generic spacetime metric as a callable matrix field on the chart."""

    domain: ChartDomain  # spatial chart; the time axis is unconstrained
    dim: int  # spacetime dimension n + 1
    matrix: Callable  # components (n+1 scalars) -> nested (n+1) x (n+1) lists

    def __call__(self, z):
        return self.matrix(z)

    def at(self, z) -> np.ndarray:
        """Matrix at plain positions of shape (..., n+1)."""
        z = np.asarray(z, dtype=float)
        comps = [z[..., i] for i in range(self.dim)]
        return _stack_matrix(self.matrix(comps), self.dim, z.shape[:-1])


@dataclass(frozen=True)
class LorentzProduct:
    """Product representative g = h - (omega - dt)^2 with unit Killing time."""

    domain: ChartDomain
    h: RiemannianField
    omega: OneFormField

    @property
    def dim(self) -> int:
        return self.domain.dim

    def randers(self) -> RandersMetric:
        """The Randers metric whose null cones this metric encodes."""
        return RandersMetric(domain=self.domain, h=self.h, omega=self.omega)

    def matrix_field(self) -> MetricMatrixField:
        n = self.dim
        h_fn, om_fn = self.h, self.omega

        def mat(z):
            x = z[:n]
            hm = h_fn(x)
            om = om_fn(x)
            rows = []
            for i in range(n):
                row = [hm[i][j] - om[i] * om[j] for j in range(n)]
                row.append(om[i])
                rows.append(row)
            rows.append(list(om) + [-1.0])
            return rows

        return MetricMatrixField(domain=self.domain, dim=n + 1, matrix=mat)

    def matrix_at(self, p) -> np.ndarray:
        """Matrix form at base positions of shape (..., n)."""
        p = np.asarray(p, dtype=float)
        n = self.dim
        comps = [p[..., i] for i in range(n)]
        hm = _stack_matrix(self.h(comps), n, p.shape[:-1])
        om = _stack_vector(self.omega(comps), n, p.shape[:-1])
        top = np.concatenate(
            [hm - om[..., :, None] * om[..., None, :], om[..., :, None]], axis=-1
        )
        bottom = np.concatenate(
            [om[..., None, :], np.broadcast_to(-1.0, p.shape[:-1] + (1, 1))], axis=-1
        )
        return np.concatenate([top, bottom], axis=-2)


def src_forward(data: StationaryData, samples=None) -> RandersMetric:
    """Stationary splitting -> Randers data: h = g0/b + (w/b)(x)(w/b), omega = w/b.

    The resulting one-form automatically has h-norm < 1, so the output
    always satisfies the Randers condition.  When `samples` is given,
    beta > 0 and positive definiteness of g0 are checked there first.
    """
    n = data.dim
    if samples is not None:
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        comps = [samples[..., i] for i in range(n)]
        beta = np.broadcast_to(
            np.asarray(data.beta(comps), dtype=float), samples.shape[:-1]
        )
        if np.any(beta <= 0.0):
            worst = samples[int(np.argmin(beta))]
            raise InvalidStationaryError(
                f"beta = {beta.min():.6g} <= 0 at {worst}"
            )
        g0 = _stack_matrix(data.g0(comps), n, samples.shape[:-1])
        if np.linalg.eigvalsh(g0).min() <= 0.0:
            raise InvalidStationaryError("g0 not positive definite on samples")

    g0_fn, w_fn, beta_fn = data.g0, data.w, data.beta

    def h_entries(x):
        g0m = g0_fn(x)
        w = w_fn(x)
        b = beta_fn(x)
        inv_b = 1.0 / b
        return [
            [g0m[i][j] * inv_b + (w[i] * inv_b) * (w[j] * inv_b) for j in range(n)]
            for i in range(n)
        ]

    def omega_entries(x):
        w = w_fn(x)
        b = beta_fn(x)
        return [w[i] / b for i in range(n)]

    return RandersMetric(
        domain=data.domain,
        h=RiemannianField(h_entries),
        omega=OneFormField(omega_entries),
    )


def src_backward(R: RandersMetric) -> LorentzProduct:
    """Randers data -> its conformal standard stationary representative."""
    return LorentzProduct(domain=R.domain, h=R.h, omega=R.omega)


def as_stationary_data(g: LorentzProduct) -> StationaryData:
    """Read the product metric back as splitting data (round-trip check).

    g = h - (omega - dt)^2 expands to g0 = h - omega x omega, w = omega,
    beta = 1.
    """
    n = g.dim
    h_fn, om_fn = g.h, g.omega

    def g0_entries(x):
        hm = h_fn(x)
        om = om_fn(x)
        return [[hm[i][j] - om[i] * om[j] for j in range(n)] for i in range(n)]

    return StationaryData(
        domain=g.domain,
        g0=RiemannianField(g0_entries),
        w=OneFormField(om_fn),
        beta=lambda x: 1.0,
    )


def evaluate_metric(g: LorentzProduct, p, A: SpacetimeVector,
                    B: SpacetimeVector, check_domain: bool = True) -> float:
    """g_p(A, B) through the bilinear rule (not the matrix form)."""
    p = np.asarray(p, dtype=float)
    if check_domain and not g.domain.contains(p):
        raise DomainError(f"position outside chart: {p}")
    n = g.dim
    comps = [p[..., i] for i in range(n)]
    hm = _stack_matrix(g.h(comps), n, p.shape[:-1])
    om = _stack_vector(g.omega(comps), n, p.shape[:-1])
    va, vb = A.spatial, B.spatial
    return float(
        np.einsum("...ij,...i,...j->...", hm, va, vb)
        - (np.dot(om, va) - A.tau) * (np.dot(om, vb) - B.tau)
    )


def classify_causal(g: LorentzProduct, p, A: SpacetimeVector,
                    tol: float = 1e-9) -> CausalClass:
    """Causal character of A at p, by the roots of the null equation.

    The dt-components making (v, tau) null are tau+ = omega(v) + sqrt(h(v,v))
    = F(p, v) and tau- = omega(v) - sqrt(h(v,v)) = -F(p, -v).  Between the
    roots g(A, A) = h(v, v) - (omega(v) - tau)^2 is positive (spacelike),
    beyond them negative (timelike); within `tol` (relative to the root
    gap) of either root, null.  Future pointing iff tau > omega(v), i.e.
    g(A, dt-direction) < 0.
    """
    v = np.asarray(A.spatial, dtype=float)
    tau = float(A.tau)
    if np.linalg.norm(v) == 0.0 and tau == 0.0:
        return CausalClass.ZERO
    R = g.randers()
    if np.linalg.norm(v) == 0.0:
        return (
            CausalClass.TIMELIKE_FUTURE if tau > 0 else CausalClass.TIMELIKE_PAST
        )
    tau_plus = float(evaluate(R, p, v))
    tau_minus = -float(evaluate(R, p, -v))
    gap = tau_plus - tau_minus  # = 2 sqrt(h(v,v)) > 0
    future = tau > 0.5 * (tau_plus + tau_minus)  # tau > omega(v)
    if abs(tau - tau_plus) <= tol * gap:
        return CausalClass.NULL_FUTURE
    if abs(tau - tau_minus) <= tol * gap:
        return CausalClass.NULL_PAST
    if tau_minus < tau < tau_plus:
        return CausalClass.SPACELIKE
    return CausalClass.TIMELIKE_FUTURE if future else CausalClass.TIMELIKE_PAST


def conformal_rescale(g, lam: Callable, samples=None) -> MetricMatrixField:
    """Pointwise rescale lambda(x) * g; null vectors stay null.

    `lam` receives the spatial components of the position (the factor must
    not depend on the time coordinate or the result would no longer be
    stationary).  When `samples` is given, positivity is checked there.
    """
    base = g.matrix_field() if isinstance(g, LorentzProduct) else g
    n_sp = base.dim - 1
    if samples is not None:
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        comps = [samples[..., i] for i in range(n_sp)]
        vals = np.broadcast_to(
            np.asarray(lam(comps), dtype=float), samples.shape[:-1]
        )
        if np.any(vals <= 0.0):
            raise NumericalError(
                f"conformal factor must be positive (min {vals.min():.6g})"
            )

    def mat(z):
        lam_val = lam(z[:n_sp])
        entries = base.matrix(z)
        return [[lam_val * e for e in row] for row in entries]

    return MetricMatrixField(domain=base.domain, dim=base.dim, matrix=mat)
