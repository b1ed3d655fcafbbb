"""Geodesic integration, reparametrization, shooting, and certification.

Both metric types are integrated as second-order ODE initial value
problems with classical fixed-step RK4 (default 1000 steps on [0, 1]);
fixed grids keep conjugate-point bracketing and golden outputs
reproducible.  Accelerations come from jets of F^2 (no hand-derived
Christoffel symbols) or from automatic differentiation of the spacetime
metric matrix field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    ChartExitError,
    NumericalError,
    RegularityError,
    ShootingConvergenceError,
)
from .finsler import (
    VELOCITY_FLOOR,
    RandersMetric,
    evaluate,
    h_matrix,
    jet,
)
from .numerics import cumulative_integral, fd_derivative, hermite_eval
from .spacetime import MetricMatrixField
from .trajectory import Trajectory
from .variational import finsler_linearized_flow


class FinslerSpray:
    """Acceleration field of the energy functional's Euler-Lagrange system.

    a(x, v) solves dvv(F^2) a = dq(F^2) - dqv(F^2)^T v, so it is correct
    for any F^2 supplied by the jet machinery, and positively 2-homogeneous
    in v.
    """

    def __init__(self, R: RandersMetric):
        self.R = R

    def acceleration(self, x, v):
        j = jet(self.R, x, v, check_domain=False)
        rhs = j.dq - np.einsum("...ji,...j->...i", j.dqv, v)
        return np.linalg.solve(j.dvv, rhs[..., None])[..., 0]


class LorentzODE:
    """Levi-Civita geodesic equation of a spacetime metric matrix field.

    Christoffel symbols are assembled from first derivatives of the metric
    entries obtained by forward-mode differentiation; they are symmetric in
    the lower indices by construction.
    """

    def __init__(self, field: MetricMatrixField):
        self.field = field
        self.dim = field.dim

    def _metric_jets(self, z, order):
        from . import jets as jm

        z = np.asarray(z, dtype=float)
        m = self.dim
        comps = jm.seed([z[..., i] for i in range(m)], m, order=order)
        entries = self.field.matrix(comps)
        batch = z.shape[:-1]
        g = np.empty(batch + (m, m))
        dg = np.empty(batch + (m, m, m))
        ddg = np.empty(batch + (m, m, m, m)) if order >= 2 else None
        for i in range(m):
            for j in range(m):
                e = entries[i][j]
                if isinstance(e, jm.Jet):
                    g[..., i, j] = e.val
                    dg[..., :, i, j] = np.broadcast_to(e.d1, batch + (m,))
                    if order >= 2:
                        ddg[..., :, :, i, j] = np.broadcast_to(
                            e.d2, batch + (m, m)
                        )
                else:
                    g[..., i, j] = e
                    dg[..., :, i, j] = 0.0
                    if order >= 2:
                        ddg[..., :, :, i, j] = 0.0
        # dg[..., e, i, j] = d_e g_ij ; ddg[..., e, f, i, j] = d_e d_f g_ij
        return g, dg, ddg

    def christoffel(self, z):
        g, dg, _ = self._metric_jets(z, order=1)
        ginv = np.linalg.inv(g)
        K = (
            np.einsum("...bdc->...dbc", dg)
            + np.einsum("...cdb->...dbc", dg)
            - dg
        )
        return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, K)

    def christoffel_with_grad(self, z):
        g, dg, ddg = self._metric_jets(z, order=2)
        ginv = np.linalg.inv(g)
        K = (
            np.einsum("...bdc->...dbc", dg)
            + np.einsum("...cdb->...dbc", dg)
            - dg
        )
        gamma = 0.5 * np.einsum("...ad,...dbc->...abc", ginv, K)
        dginv = -np.einsum("...ai,...eij,...jd->...ead", ginv, dg, ginv)
        dK = (
            np.einsum("...ebdc->...edbc", ddg)
            + np.einsum("...ecdb->...edbc", ddg)
            - ddg
        )
        dgamma = 0.5 * (
            np.einsum("...ead,...dbc->...eabc", dginv, K)
            + np.einsum("...ad,...edbc->...eabc", ginv, dK)
        )
        return gamma, dgamma

    def acceleration(self, z, zdot):
        gamma = self.christoffel(z)
        return -np.einsum("...abc,...b,...c->...a", gamma, zdot, zdot)


def _rk4_second_order(accel: Callable, x0, v0, steps: int,
                      domain_check: Optional[Callable] = None):
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    dim = x0.shape[-1]
    dt = 1.0 / steps
    xs = np.empty((steps + 1, dim))
    vs = np.empty((steps + 1, dim))
    xs[0], vs[0] = x0, v0
    x, v = x0.copy(), v0.copy()
    for i in range(steps):
        a1 = accel(x, v)
        x2, v2 = x + 0.5 * dt * v, v + 0.5 * dt * a1
        a2 = accel(x2, v2)
        x3, v3 = x + 0.5 * dt * v2, v + 0.5 * dt * a2
        a3 = accel(x3, v3)
        x4, v4 = x + dt * v3, v + dt * a3
        a4 = accel(x4, v4)
        x = x + dt / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        if domain_check is not None and not domain_check(x):
            raise ChartExitError((i + 1) * dt)
        xs[i + 1], vs[i + 1] = x, v
    s = np.linspace(0.0, 1.0, steps + 1)
    return s, xs, vs


def finsler_logs(R: RandersMetric, x, v) -> dict:
    f = evaluate(R, x, v, check_domain=False)
    hm = h_matrix(R, x)
    return {
        "F": np.asarray(f),
        "h_speed": np.sqrt(np.einsum("...ij,...i,...j->...", hm, v, v)),
    }


def integrate_finsler_geodesic(R: RandersMetric, x0, v0,
                               steps: int = 1000) -> Trajectory:
    """RK4 solution of the Randers geodesic IVP on [0, 1], with F and
    h-speed logged per sample."""
    v0 = np.asarray(v0, dtype=float)
    if np.linalg.norm(v0) < VELOCITY_FLOOR:
        raise RegularityError("initial velocity below the floor")
    if not R.domain.contains(x0):
        raise ChartExitError(0.0, "initial position outside chart")
    spray = FinslerSpray(R)
    s, xs, vs = _rk4_second_order(
        spray.acceleration, x0, v0, steps, domain_check=R.domain.contains
    )
    return Trajectory(s=s, x=xs, v=vs, logs=finsler_logs(R, xs, vs))


def lorentz_logs(field: MetricMatrixField, x, v) -> dict:
    g = field.at(x)
    gv = np.einsum("...ij,...j->...i", g, v)
    return {
        "g_zz": np.einsum("...i,...i->...", gv, v),
        "g_zt": gv[..., -1],
    }


def integrate_lorentz_geodesic(field: MetricMatrixField, z0, zdot0,
                               steps: int = 1000) -> Trajectory:
    """RK4 solution of the spacetime geodesic IVP, logging g(zdot, zdot)
    and g(zdot, coordinate time direction) per sample."""
    ode = LorentzODE(field)
    z0 = np.asarray(z0, dtype=float)
    if not field.domain.contains(z0[:-1]):
        raise ChartExitError(0.0, "initial position outside chart")

    def check(z):
        return field.domain.contains(z[:-1])

    s, zs, vs = _rk4_second_order(ode.acceleration, z0, zdot0, steps,
                                  domain_check=check)
    return Trajectory(s=s, x=zs, v=vs, logs=lorentz_logs(field, zs, vs))


def reparametrize_constant_h_speed(traj: Trajectory,
                                   R: RandersMetric) -> Trajectory:
    """Reparametrize a curve on [0, 1] to constant Riemannian h-speed.

    Same image and endpoints; the new velocities satisfy
    sqrt(h(x)(v, v)) = total h-length exactly at every sample.
    """
    hm = h_matrix(R, traj.x)
    c = np.sqrt(np.einsum("...ij,...i,...j->...", hm, traj.v, traj.v))
    if np.any(c < VELOCITY_FLOOR):
        raise RegularityError("degenerate velocity sample in reparametrization")
    sigma = cumulative_integral(c, traj.s)
    total = sigma[-1]
    targets = np.linspace(0.0, total, len(traj.s))
    # invert the monotone arc-length map by Newton on its Hermite interpolant
    s_new = np.interp(targets, sigma, traj.s)
    dc = fd_derivative(c, traj.s[1] - traj.s[0])
    for _ in range(6):
        sig_val, _ = hermite_eval(traj.s, sigma, c, s_new)
        c_val, _ = hermite_eval(traj.s, c, dc, s_new)
        s_new = np.clip(s_new - (sig_val - targets) / c_val, 0.0, 1.0)
    s_new[0], s_new[-1] = 0.0, 1.0
    x_new, v_new = traj.interpolate(s_new)
    hm_new = h_matrix(R, x_new)
    c_new = np.sqrt(np.einsum("...ij,...i,...j->...", hm_new, v_new, v_new))
    v_new = v_new * (total / c_new)[:, None]
    out = Trajectory(s=np.linspace(0.0, 1.0, len(traj.s)), x=x_new, v=v_new)
    out.logs.update(finsler_logs(R, out.x, out.v))
    return out


def euler_lagrange_residual(R: RandersMetric, traj: Trajectory) -> float:
    """Max interior violation of d/ds dv(F^2) = dq(F^2) along the curve.

    The s-derivative uses the 4th-order stencil on the trajectory grid, so
    the residual of a true geodesic scales like h^4.
    """
    speeds = np.linalg.norm(traj.v, axis=-1)
    if np.any(speeds < VELOCITY_FLOOR):
        raise RegularityError("degenerate velocity sample")
    j = jet(R, traj.x, traj.v, check_domain=False)
    dp = fd_derivative(j.dv, traj.s[1] - traj.s[0])
    res = np.abs(dp - j.dq)[2:-2]
    return float(res.max())


def pregeodesic_residual(R: RandersMetric, traj: Trajectory) -> float:
    """Max violation of the length-functional Euler-Lagrange equation.

    d/ds dv(F) - dq(F) vanishes on geodesic paths in any parametrization
    (dv(F) is 0-homogeneous in the velocity), so this certifies the path
    while euler_lagrange_residual certifies the affine parametrization.
    """
    speeds = np.linalg.norm(traj.v, axis=-1)
    if np.any(speeds < VELOCITY_FLOOR):
        raise RegularityError("degenerate velocity sample")
    j = jet(R, traj.x, traj.v, check_domain=False)
    inv_2f = 0.5 / j.F[..., None]
    dp = fd_derivative(j.dv * inv_2f, traj.s[1] - traj.s[0])
    res = np.abs(dp - j.dq * inv_2f)[2:-2]
    return float(res.max())


def lorentz_el_residual(field: MetricMatrixField, traj: Trajectory) -> float:
    """Max interior violation of the spacetime geodesic equation."""
    ode = LorentzODE(field)
    gamma = ode.christoffel(traj.x)
    zdd = fd_derivative(traj.v, traj.s[1] - traj.s[0])
    res = zdd + np.einsum("...abc,...b,...c->...a", gamma, traj.v, traj.v)
    return float(np.abs(res)[2:-2].max())


def shooting_jacobian(R: RandersMetric, traj: Trajectory) -> np.ndarray:
    """Terminal-position sensitivity dx(1)/dv0 from the linearized flow."""
    flow = finsler_linearized_flow(R, traj)
    return flow.Y[-1]


@dataclass(frozen=True)
class ShootingProblem:
    """Two-point boundary problem data with Newton settings."""

    p: np.ndarray
    q: np.ndarray
    v0: Optional[np.ndarray] = None
    steps: int = 1000
    tol: float = 1e-10
    max_iterations: int = 30

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if np.allclose(self.p, self.q):
            raise ValueError("shooting endpoints must differ")

    def solve(self, R: RandersMetric) -> Trajectory:
        return shoot_geodesic(R, self.p, self.q, v0=self.v0,
                              steps=self.steps, tol=self.tol,
                              max_iterations=self.max_iterations)


def shoot_geodesic(R: RandersMetric, p, q, v0=None, steps: int = 1000,
                   tol: float = 1e-10, max_iterations: int = 30) -> Trajectory:
    """Two-point boundary problem by damped Newton on the initial velocity.

    The Newton matrix is the terminal block of the linearized flow.  On
    success the returned trajectory satisfies |x(1) - q| < 1e-8; otherwise
    a ShootingConvergenceError carries the best residual found.  Multiple
    solutions are not enumerated: the first solution found is returned,
    steered by the initial guess.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.allclose(p, q):
        raise NumericalError("shooting endpoints must differ")
    v = np.asarray(v0, dtype=float) if v0 is not None else q - p

    def try_integrate(vel):
        try:
            traj = integrate_finsler_geodesic(R, p, vel, steps=steps)
        except (ChartExitError, RegularityError):
            return None, np.inf
        return traj, float(np.linalg.norm(traj.x[-1] - q))

    traj, err = try_integrate(v)
    halvings = 0
    while traj is None:
        v = 0.5 * v  # guess exits the chart; shrink until it stays inside
        halvings += 1
        if halvings > 40:
            raise ShootingConvergenceError(np.inf, 0)
        traj, err = try_integrate(v)

    best = err
    for iteration in range(max_iterations):
        if err < tol:
            break
        S = shooting_jacobian(R, traj)
        try:
            delta = -np.linalg.solve(S, traj.x[-1] - q)
        except np.linalg.LinAlgError:
            raise ShootingConvergenceError(best, iteration)
        lam = 1.0
        improved = False
        for _ in range(12):
            cand, cand_err = try_integrate(v + lam * delta)
            if cand is not None and cand_err < err:
                v, traj, err = v + lam * delta, cand, cand_err
                improved = True
                break
            lam *= 0.5
        best = min(best, err)
        if not improved:
            break
    if err >= 1e-8:
        raise ShootingConvergenceError(best, max_iterations)
    return traj


def rk4_order_factor(R: RandersMetric, x0, v0, exact_endpoint,
                     steps: int = 250) -> float:
    """Terminal-error ratio under step halving (= ~16 for RK4)."""
    e1 = np.linalg.norm(
        integrate_finsler_geodesic(R, x0, v0, steps=steps).x[-1] - exact_endpoint
    )
    e2 = np.linalg.norm(
        integrate_finsler_geodesic(R, x0, v0, steps=2 * steps).x[-1]
        - exact_endpoint
    )
    return float(e1 / e2)
