"""Second-order regularity probe of the path-space energy functional.

The energy is C^{1,1} on the H^1 path space and twice Gateaux
differentiable at regular curves, but its second differential fails to be
a Frechet differential unless F^2 is quadratic in v along the curve.  The
probe measures the Taylor remainder of dv(F^2) paired against a nested
family of bump fields whose H^1 norms shrink like sqrt(eps): for
Riemannian data the pairing vanishes identically, for genuine Randers data
it scales like eps (a fitted log-log slope of 1), which is exactly the
obstruction to twice Frechet differentiability.

The auxiliary Riemannian metric fixing the H^1 structure is the chart
Euclidean metric throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import DirectionDegeneracyError, NumericalError, RegularityError
from .finsler import VELOCITY_FLOOR, RandersMetric, jet
from .morse import hat_basis
from .numerics import loglog_fit, simpson_weights
from .trajectory import Trajectory

EPS_GRID = np.logspace(-1, -4, 12)  # strictly decreasing, three decades
QUADRATIC_FLOOR = 1e-12             # residuals below this mean "quadratic"


@dataclass
class PathGridH10:
    """Piecewise-linear endpoint-vanishing fields on a uniform N-cell grid.

    Carries the cell-aligned Simpson quadrature shared with the discrete
    Hessians; the H^1 inner product uses the chart Euclidean metric.
    """

    N: int
    nodes: np.ndarray = dc_field(init=False)
    quad_s: np.ndarray = dc_field(init=False)
    quad_cell: np.ndarray = dc_field(init=False)
    quad_w: np.ndarray = dc_field(init=False)
    phi: np.ndarray = dc_field(init=False)
    dphi: np.ndarray = dc_field(init=False)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least 2 cells")
        self.nodes = np.arange(1, self.N) / self.N
        offsets = np.linspace(0.0, 1.0, 5) / self.N
        cells = np.arange(self.N) / self.N
        self.quad_s = (cells[:, None] + offsets[None, :]).reshape(-1)
        self.quad_cell = np.repeat(np.arange(self.N), 5)
        self.quad_w = np.tile(
            np.array([1.0, 4.0, 2.0, 4.0, 1.0]) * (1.0 / (4 * self.N)) / 3.0,
            self.N,
        )
        self.phi, self.dphi = hat_basis(self.N, self.quad_s, self.quad_cell)

    def hat_h1_norms_sq(self) -> np.ndarray:
        """Quadrature H^1_0 seminorms of the hats (analytic value: 2N)."""
        return np.einsum("q,iq,iq->i", self.quad_w, self.dphi, self.dphi)


def energy_quadrature(R: RandersMetric, traj: Trajectory,
                      grid: PathGridH10, delta_x=None, delta_v=None) -> float:
    """Energy of (a perturbation of) a curve on the grid's quadrature.

    Used by the finite-difference oracles for basis-direction derivatives:
    hat fields have derivative jumps at the basis nodes, which this
    quadrature integrates exactly while a generic trajectory-grid rule
    would not.
    """
    x, v = traj.interpolate(grid.quad_s)
    if delta_x is not None:
        x = x + delta_x
    if delta_v is not None:
        v = v + delta_v
    from .finsler import evaluate

    f = np.asarray(evaluate(R, x, v, check_domain=False))
    return float(np.dot(grid.quad_w, 0.5 * f * f))


def energy_gradient(R: RandersMetric, traj: Trajectory,
                    grid: PathGridH10) -> np.ndarray:
    """First variation of the energy over the hat basis, flat (N-1)*n.

    Vanishes (up to quadrature noise) exactly when the curve passes the
    Euler-Lagrange residual certificate.
    """
    speeds = np.linalg.norm(traj.v, axis=-1)
    if np.any(speeds < VELOCITY_FLOOR):
        raise RegularityError("degenerate velocity sample")
    x, v = traj.interpolate(grid.quad_s)
    j = jet(R, x, v, check_domain=False)
    grad = 0.5 * (
        np.einsum("q,qa,iq->ia", grid.quad_w, j.dq, grid.phi)
        + np.einsum("q,qa,iq->ia", grid.quad_w, j.dv, grid.dphi)
    )
    return grad.reshape(-1)


def energy_gateaux_hessian(R: RandersMetric, traj: Trajectory,
                           xi, xid, eta, etad, s=None, w=None) -> float:
    """Second Gateaux differential paired with two sampled fields.

    Fields are sampled on `s` (default: the trajectory grid) together with
    their derivatives; quadrature is Simpson with weights `w` matching `s`.
    The four-term integrand is symmetric in the two fields by construction.
    """
    if s is None:
        s = traj.s
        xq, vq = traj.x, traj.v
        w = simpson_weights(s) if w is None else w
    else:
        xq, vq = traj.interpolate(s)
        if w is None:
            raise ValueError("explicit sample grids need explicit weights")
    speeds = np.linalg.norm(vq, axis=-1)
    if np.any(speeds < VELOCITY_FLOOR):
        raise RegularityError("degenerate velocity sample")
    j = jet(R, xq, vq, check_domain=False)
    integrand = 0.5 * (
        np.einsum("qab,qa,qb->q", j.dqq, xi, eta)
        + np.einsum("qba,qa,qb->q", j.dqv, xid, eta)
        + np.einsum("qab,qa,qb->q", j.dqv, xi, etad)
        + np.einsum("qab,qa,qb->q", j.dvv, xid, etad)
    )
    return float(np.dot(w, integrand))


# ---------------------------------------------------------------------------
# the epsilon family and the remainder residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsilonFamily:
    """Bump fields eta, xi built from a nested interval family.

    J = [s0, s0 + ell]; J_eps = [s0, s0 + eps] is left-anchored so the
    nesting J_eps inside J_eps' for eps < eps' is automatic.  The fields
    are v (resp. w) times the antiderivative of (indicator of J_eps) - eps,
    so they vanish at both endpoints exactly and their H^1_0 norms are
    |v| sqrt(eps - eps^2).
    """

    v: np.ndarray
    w: np.ndarray
    s0: float
    ell: float
    eps: float

    @property
    def interval(self):
        return (self.s0, self.s0 + self.eps)

    def chi_integral(self, s):
        # min(s - s0, eps) keeps eta(1) = 0 exact in floating point
        s = np.asarray(s, dtype=float)
        return np.clip(np.minimum(s - self.s0, self.eps), 0.0, None)

    def eta(self, s):
        base = self.chi_integral(s) - self.eps * np.asarray(s)
        return base[..., None] * self.v

    def xi(self, s):
        base = self.chi_integral(s) - self.eps * np.asarray(s)
        return base[..., None] * self.w

    def eta_dot(self, s):
        s = np.asarray(s, dtype=float)
        chi = ((s > self.s0) & (s <= self.s0 + self.eps)).astype(float)
        return (chi - self.eps)[..., None] * self.v

    @property
    def eta_h1_norm(self) -> float:
        return float(np.linalg.norm(self.v)) * np.sqrt(self.eps - self.eps ** 2)

    @property
    def xi_h1_norm(self) -> float:
        return float(np.linalg.norm(self.w)) * np.sqrt(self.eps - self.eps ** 2)


def build_epsilon_family(v, w, s0: float, epsilon: float,
                         ell: float = 0.2) -> EpsilonFamily:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.linalg.norm(v) == 0.0 or np.linalg.norm(w) == 0.0:
        raise ValueError("witness directions must be nonzero")
    if not 0.0 < epsilon < min(ell, 1.0):
        raise ValueError(
            f"epsilon must lie in (0, min(ell, 1)) = (0, {min(ell, 1.0)})"
        )
    if not (0.0 <= s0 and s0 + ell <= 1.0):
        raise ValueError("base interval J must sit inside [0, 1]")
    return EpsilonFamily(v=v, w=w, s0=s0, ell=ell, eps=epsilon)


def _panel_nodes(a: float, b: float, cells: int):
    s = np.linspace(a, b, cells + 1)
    return s, simpson_weights(s)


def _dv_remainder(R: RandersMetric, x, v_base, u):
    """dv(F^2)(x, v+u) - dv(F^2)(x, v) - dvv(F^2)(x, v)[u] at samples."""
    j0 = jet(R, x, v_base, check_domain=False)
    j1 = jet(R, x, v_base + u, check_domain=False)
    return j1.dv - j0.dv - np.einsum("...ab,...b->...a", j0.dvv, u)


@dataclass
class FrechetResidual:
    """One residual evaluation, by the full and the split route."""

    value: float
    split_value: float

    @property
    def route_agreement(self) -> float:
        return abs(self.value - self.split_value)


def frechet_residual(R: RandersMetric, traj: Trajectory,
                     family: EpsilonFamily, cells_inner: int = 64,
                     cells_outer: int = 128) -> FrechetResidual:
    """Taylor-remainder pairing of the epsilon family along the curve.

    Quadrature is composite Simpson per panel, split at the boundary of
    J_eps where the bump derivatives jump; the equivalent decomposition
    into the J_eps contribution minus eps times the full pairing against w
    is evaluated as an internal consistency check (agreement ~1e-9 is a
    contract violation otherwise).
    """
    eps = family.eps
    a, b = family.interval
    panels = [
        _panel_nodes(0.0, a, cells_outer) if a > 0 else None,
        _panel_nodes(a, b, cells_inner),
        _panel_nodes(b, 1.0, cells_outer) if b < 1 else None,
    ]
    u_vals = [-eps * family.v, (1.0 - eps) * family.v, -eps * family.v]
    xi_dots = [-eps * family.w, (1.0 - eps) * family.w, -eps * family.w]

    full = 0.0
    pair_w = 0.0           # integral of remainder . w over [0, 1]
    inner_vs_w = 0.0       # integral over J_eps of remainder((1-eps)v) . w
    for panel, u, xid in zip(panels, u_vals, xi_dots):
        if panel is None:
            continue
        s, wq = panel
        x, vb = traj.interpolate(s)
        if np.min(np.linalg.norm(vb + u, axis=-1)) < VELOCITY_FLOOR:
            raise RegularityError(
                "perturbed velocity fell below the floor; shrink |v|"
            )
        rem = _dv_remainder(R, x, vb, np.broadcast_to(u, vb.shape))
        dot_w = rem @ family.w
        full += float(np.dot(wq, rem @ xid))
        pair_w += float(np.dot(wq, dot_w))
        if u is u_vals[1]:
            inner_vs_w += float(np.dot(wq, dot_w))
    split = inner_vs_w - eps * pair_w
    return FrechetResidual(value=full, split_value=split)


@dataclass
class ResidualCurve:
    """Residuals over a decreasing epsilon grid plus the log-log fit."""

    eps: np.ndarray
    residuals: np.ndarray
    slope: Optional[float]
    intercept: Optional[float]
    verdict: str  # "linear" | "quadratic"

    def __post_init__(self):
        if np.any(np.diff(self.eps) >= 0):
            raise ValueError("epsilon grid must be strictly decreasing")
        if len(self.eps) < 6:
            raise ValueError("need at least 6 epsilon points for a fit")


def scan_residuals(R: RandersMetric, traj: Trajectory, v, w, s0: float,
                   ell: float = 0.2, eps_grid=None) -> ResidualCurve:
    """Residuals over the epsilon grid, with route-consistency checks."""
    eps_grid = EPS_GRID if eps_grid is None else np.asarray(eps_grid)
    values = np.empty(len(eps_grid))
    for k, eps in enumerate(eps_grid):
        fam = build_epsilon_family(v, w, s0, float(eps), ell=ell)
        res = frechet_residual(R, traj, fam)
        scale = max(1.0, abs(res.value))
        if res.route_agreement > 1e-9 * scale:
            raise NumericalError(
                f"residual route disagreement {res.route_agreement:.3e} "
                f"at eps={eps:g}"
            )
        values[k] = res.value
    return fit_scaling_exponent(eps_grid, values)


def fit_scaling_exponent(eps_grid, values) -> ResidualCurve:
    """Least-squares slope of log|Res| against log eps.

    Residuals at quadrature noise level mean the vertical Hessian is
    independent of the direction (quadratic F^2): no slope is fitted.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.max(np.abs(values)) < QUADRATIC_FLOOR:
        return ResidualCurve(eps=eps_grid, residuals=values, slope=None,
                             intercept=None, verdict="quadratic")
    slope, intercept = loglog_fit(eps_grid, values)
    return ResidualCurve(eps=eps_grid, residuals=values, slope=slope,
                         intercept=intercept, verdict="linear")


def witness_search(R: RandersMetric, traj: Trajectory, s_mid: float,
                   n_directions: int = 24, rotate: float = 0.0,
                   rng: Optional[np.random.Generator] = None):
    """Direction maximizing the remainder pairing at the window midpoint.

    Returns v = w = (half the minimal curve speed) times the best unit
    direction; the magnitude cap keeps perturbed velocities inside the
    smooth region of F^2.
    """
    n = traj.dim
    x_mid, v_mid = traj.interpolate(np.array([s_mid]))
    scale = 0.5 * float(np.min(np.linalg.norm(traj.v, axis=-1)))
    if n == 2:
        angles = np.linspace(0.0, 2 * np.pi, n_directions, endpoint=False)
        dirs = np.stack([np.cos(angles + rotate), np.sin(angles + rotate)], axis=-1)
    else:
        rng = rng or np.random.default_rng(0)
        dirs = rng.normal(size=(n_directions, n))
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    x_rep = np.broadcast_to(x_mid, (n_directions, n))
    v_rep = np.broadcast_to(v_mid, (n_directions, n))
    rem = _dv_remainder(R, x_rep, v_rep, scale * dirs)
    scores = np.abs(np.einsum("ka,ka->k", rem, dirs))
    best = int(np.argmax(scores))
    return scale * dirs[best], scale * dirs[best], float(scores[best])


@dataclass
class ProbeReport:
    """Windowed slope measurements for one metric and curve."""

    label: str
    verdict: str                    # "linear" | "quadratic"
    windows: list                   # (s0, ResidualCurve) pairs
    witness_v: Optional[np.ndarray]
    witness_w: Optional[np.ndarray]
    slope: Optional[float]
    intercept: Optional[float]
    slope_spread: Optional[float]
    max_abs_residual: float

    @property
    def passed(self) -> bool:
        if self.verdict == "quadratic":
            return self.max_abs_residual < QUADRATIC_FLOOR
        return (
            self.slope is not None
            and all(
                0.9 <= c.slope <= 1.1 for _, c in self.windows
            )
            and self.slope_spread is not None
            and self.slope_spread <= 0.1
        )


def probe_metric(R: RandersMetric, traj: Trajectory, label: str = "case",
                 s0_windows=(0.15, 0.4, 0.65), ell: float = 0.2,
                 eps_grid=None, expect_linear: Optional[bool] = None,
                 max_rotations: int = 3) -> ProbeReport:
    """Full probe: witness search, residual scans over shifted windows.

    A quadratic verdict requires every residual below the noise floor; a
    linear verdict carries the fitted slopes per window.  When the caller
    knows the metric is genuinely non-Riemannian (expect_linear=True) a
    quadratic outcome means the witness direction was degenerate: the
    search is rotated and retried before giving up.
    """
    rotation = 0.0
    for _ in range(max_rotations):
        s_mid = s0_windows[0] + 0.5 * ell
        v, w, _score = witness_search(R, traj, s_mid, rotate=rotation)
        windows = [
            (s0, scan_residuals(R, traj, v, w, s0, ell=ell, eps_grid=eps_grid))
            for s0 in s0_windows
        ]
        max_res = max(float(np.abs(c.residuals).max()) for _, c in windows)
        quadratic = [c.verdict == "quadratic" for _, c in windows]
        if all(quadratic) and not expect_linear:
            return ProbeReport(
                label=label, verdict="quadratic", windows=windows,
                witness_v=v, witness_w=w, slope=None, intercept=None,
                slope_spread=None, max_abs_residual=max_res,
            )
        if any(quadratic):
            rotation += 0.39996322972865332  # golden angle, retry rotated
            continue
        slopes = [c.slope for _, c in windows]
        return ProbeReport(
            label=label, verdict="linear", windows=windows,
            witness_v=v, witness_w=w,
            slope=float(np.mean(slopes)),
            intercept=float(np.mean([c.intercept for _, c in windows])),
            slope_spread=float(np.max(slopes) - np.min(slopes)),
            max_abs_residual=max_res,
        )
    raise DirectionDegeneracyError(
        f"residuals below noise floor after {max_rotations} witness "
        f"rotations (metric {label}); the chosen directions pair to zero"
    )
