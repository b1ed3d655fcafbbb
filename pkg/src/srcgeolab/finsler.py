"""Randers metrics on a coordinate chart and the derivative jets of F^2.

A Randers metric is F(x, v) = sqrt(h_x(v, v)) + omega_x(v) with h a
Riemannian metric field and omega a one-form of h-norm < 1.  Everything
downstream (sprays, Hessians, lifts) consumes the first/second/third
derivatives of F^2, which are produced here by forward-mode Taylor
differentiation of the scalar F^2 evaluator; central finite differences
serve as an independent cross-check in the test suite.

Field callbacks receive the position as a sequence of n scalar-like
components (floats, numpy arrays, or Jet values) and must return nested
lists: n x n for the metric, length n for the one-form.  Writing them
with the math shims from :mod:`srcgeolab.jets` keeps them differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from . import jets
from .errors import (
    DomainError,
    InvalidRandersError,
    NondifferentiablePointError,
    RegularityError,
)

VELOCITY_FLOOR = 1e-12  # below this Euclidean speed, F^2 counts as nondifferentiable


@dataclass(frozen=True)
class ChartDomain:
    """Open box in R^n housing a single coordinate chart."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.bounds) < 1:
            raise ValueError("chart needs at least one axis")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty axis interval ({lo}, {hi})")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all([lo < xi < hi for xi, (lo, hi) in zip(x, self.bounds)])
        )

    def contains_all(self, xs) -> np.ndarray:
        """Vectorized membership for positions of shape (..., n)."""
        xs = np.asarray(xs, dtype=float)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((xs > lo) & (xs < hi), axis=-1)

    def sample(self, count: int, rng: np.random.Generator, shrink: float = 0.05):
        """Uniform interior samples, pulled in from the faces by `shrink`."""
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        pad = shrink * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.dim))


@dataclass(frozen=True)
class RiemannianField:
    """Position -> symmetric positive definite matrix, as nested lists.

    Symmetry is exact by construction: builders emit the same entry object
    for (i, j) and (j, i).  `grad` optionally holds an analytic derivative
    evaluator; the core differentiates `matrix` directly and never needs it.
    """

    matrix: Callable
    grad: Optional[Callable] = None

    def __call__(self, x):
        return self.matrix(x)


@dataclass(frozen=True)
class OneFormField:
    """Position -> covector, as a length-n list."""

    covector: Callable

    def __call__(self, x):
        return self.covector(x)


@dataclass(frozen=True)
class RandersMetric:
    """Randers data (h, omega) on a chart."""

    domain: ChartDomain
    h: RiemannianField
    omega: OneFormField

    @property
    def dim(self) -> int:
        return self.domain.dim


@dataclass(frozen=True)
class FinslerJet:
    """F, F^2 and the derivative blocks of F^2 at (x, v), chart coordinates.

    Index convention: dqv[i, j] = d^2 F^2 / dq_i dv_j.  With a leading
    batch axis, every block gains that axis in front.
    """

    x: np.ndarray
    v: np.ndarray
    F: np.ndarray
    F2: np.ndarray
    dq: np.ndarray
    dv: np.ndarray
    dvv: np.ndarray
    dqv: np.ndarray
    dqq: np.ndarray


@dataclass(frozen=True)
class ValidationReport:
    """Result of sampling the Randers condition over the chart."""

    passed: bool
    max_omega_norm: float
    worst_point: np.ndarray
    min_h_eigenvalue: float
    samples_checked: int


def _stack_matrix(entries, n, batch_shape):
    """Nested-list field output -> ndarray (..., n, n)."""
    rows = []
    for i in range(n):
        row = [np.broadcast_to(np.asarray(entries[i][j], dtype=float), batch_shape)
               for j in range(n)]
        rows.append(np.stack(row, axis=-1))
    return np.stack(rows, axis=-2)


def _stack_vector(entries, n, batch_shape):
    comps = [np.broadcast_to(np.asarray(entries[i], dtype=float), batch_shape)
             for i in range(n)]
    return np.stack(comps, axis=-1)


def h_matrix(R: RandersMetric, x) -> np.ndarray:
    """Metric matrix h(x) for plain positions of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    n = R.dim
    comps = [x[..., i] for i in range(n)]
    return _stack_matrix(R.h(comps), n, x.shape[:-1])


def omega_covector(R: RandersMetric, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = R.dim
    comps = [x[..., i] for i in range(n)]
    return _stack_vector(R.omega(comps), n, x.shape[:-1])


def evaluate(R: RandersMetric, x, v, check_domain: bool = True):
    """F(x, v) = sqrt(h(v, v)) + omega(v); batched over leading axes."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if check_domain and not np.all(R.domain.contains_all(x)):
        raise DomainError(f"position outside chart: {x}")
    h = h_matrix(R, x)
    om = omega_covector(R, x)
    q = np.einsum("...ij,...i,...j->...", h, v, v)
    return np.sqrt(q) + np.einsum("...i,...i->...", om, v)


def _f2_jet_raw(R: RandersMetric, x, v, order):
    """Evaluate F^2 on seeded Taylor variables; returns (Jet, F value)."""
    n = R.dim
    m = 2 * n
    xs = np.asarray(x, dtype=float)
    vs = np.asarray(v, dtype=float)
    xj = jets.seed([xs[..., i] for i in range(n)], m, order=order, offset=0)
    vj = jets.seed([vs[..., i] for i in range(n)], m, order=order, offset=n)
    hm = R.h(xj)
    om = R.omega(xj)
    q = None
    for i in range(n):
        term = hm[i][i] * vj[i] * vj[i]
        q = term if q is None else q + term
        for j in range(i + 1, n):
            q = q + 2.0 * (hm[i][j] * vj[i] * vj[j])
    w = None
    for i in range(n):
        term = om[i] * vj[i]
        w = term if w is None else w + term
    f = jets.sqrt(q) + w
    return f * f, np.asarray(f.val)


def jet(R: RandersMetric, x, v, check_domain: bool = True,
        floor: float = VELOCITY_FLOOR) -> FinslerJet:
    """Second-order jet of F^2 at (x, v); batched over leading axes.

    Raises NondifferentiablePointError when any velocity sample falls below
    the Euclidean floor: F^2 is C^{1,1} only, the vertical Hessian blows up
    at the zero section.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if check_domain and not np.all(R.domain.contains_all(x)):
        raise DomainError(f"position outside chart: {x}")
    speeds = np.linalg.norm(v, axis=-1)
    if np.any(speeds < floor):
        raise NondifferentiablePointError(
            f"velocity norm {np.min(speeds):.3e} below floor {floor:.1e}"
        )
    n = R.dim
    f2, fval = _f2_jet_raw(R, x, v, order=2)
    d1 = np.asarray(f2.d1)
    d2 = np.asarray(f2.d2)
    return FinslerJet(
        x=x,
        v=v,
        F=fval,
        F2=np.asarray(f2.val),
        dq=d1[..., :n],
        dv=d1[..., n:],
        dvv=d2[..., n:, n:],
        dqv=d2[..., :n, n:],
        dqq=d2[..., :n, :n],
    )


@dataclass(frozen=True)
class FinslerJet3:
    """Third-order blocks of F^2 used by linearized flows.

    dabc[i, j, k] = d^3 F^2 / da_i db_j dc_k with a,b,c in {q, v}.
    """

    jet: FinslerJet
    dqqv: np.ndarray
    dqvv: np.ndarray
    dvvv: np.ndarray


def jet3(R: RandersMetric, x, v, floor: float = VELOCITY_FLOOR) -> FinslerJet3:
    """Second plus third-order jet, for variational (Jacobi) equations."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    speeds = np.linalg.norm(v, axis=-1)
    if np.any(speeds < floor):
        raise NondifferentiablePointError(
            f"velocity norm {np.min(speeds):.3e} below floor {floor:.1e}"
        )
    n = R.dim
    f2, fval = _f2_jet_raw(R, x, v, order=3)
    d1 = np.asarray(f2.d1)
    d2 = np.asarray(f2.d2)
    d3 = np.asarray(f2.d3)
    base = FinslerJet(
        x=x, v=v, F=fval, F2=np.asarray(f2.val),
        dq=d1[..., :n], dv=d1[..., n:],
        dvv=d2[..., n:, n:], dqv=d2[..., :n, n:], dqq=d2[..., :n, :n],
    )
    return FinslerJet3(
        jet=base,
        dqqv=d3[..., :n, :n, n:],
        dqvv=d3[..., :n, n:, n:],
        dvvv=d3[..., n:, n:, n:],
    )


def reverse(R: RandersMetric) -> RandersMetric:
    """Reversed metric: same h, negated one-form, so F~(x, v) = F(x, -v)."""
    base = R.omega

    def neg(x):
        return [-c for c in base(x)]

    return RandersMetric(domain=R.domain, h=R.h, omega=OneFormField(neg))


def validate(R: RandersMetric, samples, margin: float = 1e-6) -> ValidationReport:
    """Sample the Randers condition sup ||omega||_h < 1 and h > 0.

    Raises InvalidRandersError when some sample reaches norm 1 or h loses
    positive definiteness; otherwise reports pass/fail against 1 - margin.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("empty sample list")
    h = h_matrix(R, samples)
    om = omega_covector(R, samples)
    eigs = np.linalg.eigvalsh(h)
    min_eig = float(eigs.min())
    if min_eig <= 0.0:
        worst = samples[int(np.argmin(eigs[:, 0]))]
        raise InvalidRandersError(
            f"h not positive definite at {worst} (min eigenvalue {min_eig:.3e})"
        )
    norms = np.sqrt(
        np.einsum("...i,...i->...", om, np.linalg.solve(h, om[..., None])[..., 0])
    )
    worst_idx = int(np.argmax(norms))
    max_norm = float(norms[worst_idx])
    if max_norm >= 1.0:
        raise InvalidRandersError(
            f"||omega||_h = {max_norm:.6f} >= 1 at {samples[worst_idx]}"
        )
    return ValidationReport(
        passed=max_norm < 1.0 - margin,
        max_omega_norm=max_norm,
        worst_point=samples[worst_idx],
        min_h_eigenvalue=min_eig,
        samples_checked=samples.shape[0],
    )


def energy(R: RandersMetric, path, floor: float = VELOCITY_FLOOR) -> float:
    """Energy of a sampled curve: composite Simpson of F^2/2 on its grid."""
    speeds = np.linalg.norm(path.v, axis=-1)
    if np.any(speeds < floor):
        raise RegularityError(
            f"degenerate velocity sample (min speed {speeds.min():.3e})"
        )
    f = evaluate(R, path.x, path.v, check_domain=False)
    return float(simpson(0.5 * f * f, x=path.s))
