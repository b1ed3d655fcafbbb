"""Curve maps of the correspondence: lightlike lift, projection, variation
lift, and the Uhlenbeck action.

A base curve gamma lifts to (gamma(s), t0 + integral of F(gamma, gamma'))
whose velocity is null and future pointing at every sample by construction;
constant-h-speed Randers geodesics lift to affinely parametrized null
geodesics of the product metric.  The variation lift sends an
endpoint-vanishing field W along a geodesic to the admissible spacetime
field (W, u) with u = h(W, x')/sqrt(h(x', x')) + omega(W); the integral
formula for u doubles as a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CausalCharacterError,
    RegularityError,
    VariationConsistencyError,
)
from .finsler import (
    VELOCITY_FLOOR,
    RandersMetric,
    evaluate,
    h_matrix,
    jet,
    omega_covector,
)
from .geodesic import finsler_logs, lorentz_logs, pregeodesic_residual
from .numerics import cumulative_integral, fd_derivative, simpson_integral
from .spacetime import LorentzProduct
from .trajectory import Trajectory


@dataclass
class LiftedPath:
    """Base curve plus its lightlike time channel."""

    base: Trajectory
    t: np.ndarray
    tdot: np.ndarray
    spacetime: Trajectory

    @property
    def t0(self) -> float:
        return float(self.t[0])

    def to_csv(self, path) -> None:
        """Trajectory CSV schema with t appended as last position coordinate."""
        n = self.base.dim
        self.spacetime.to_csv(
            path,
            position_names=[f"x{i + 1}" for i in range(n)] + ["t"],
            velocity_names=[f"v{i + 1}" for i in range(n)] + ["vt"],
        )


@dataclass
class VariationField:
    """Endpoint-vanishing vector field sampled along a base geodesic."""

    s: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        if self.W.shape[0] != self.s.shape[0]:
            raise ValueError("field samples must match the grid")
        if np.any(self.W[0] != 0.0) or np.any(self.W[-1] != 0.0):
            raise ValueError("variation field must vanish at both endpoints")

    @staticmethod
    def from_callable(fn, s) -> "VariationField":
        s = np.asarray(s, dtype=float)
        W = np.stack([np.asarray(fn(si), dtype=float) for si in s])
        W[0] = 0.0
        W[-1] = 0.0
        return VariationField(s=s, W=W)


@dataclass
class AdmissibleVariation:
    """Spacetime variation (W, u) along a lifted geodesic with g(z', U) = 0."""

    field: VariationField
    u: np.ndarray
    u_integral: np.ndarray
    lifted: LiftedPath
    max_constraint_violation: float
    route_deviation: float


def lightlike_lift(R: RandersMetric, gamma: Trajectory,
                   t0: float = 0.0) -> LiftedPath:
    """Future-pointing lightlike lift of a regular base curve.

    The time derivative channel is F(gamma, gamma') pointwise (so the
    lifted velocity is exactly null); the time positions come from
    cumulative Simpson quadrature.
    """
    speeds = np.linalg.norm(gamma.v, axis=-1)
    if np.any(speeds < VELOCITY_FLOOR):
        raise RegularityError("degenerate velocity sample in lift input")
    tdot = np.asarray(evaluate(R, gamma.x, gamma.v, check_domain=False))
    t = t0 + cumulative_integral(tdot, gamma.s)
    zx = np.concatenate([gamma.x, t[:, None]], axis=1)
    zv = np.concatenate([gamma.v, tdot[:, None]], axis=1)
    product = LorentzProduct(domain=R.domain, h=R.h, omega=R.omega)
    spacetime = Trajectory(
        s=gamma.s.copy(), x=zx, v=zv,
        logs=lorentz_logs(product.matrix_field(), zx, zv),
    )
    return LiftedPath(base=gamma, t=t, tdot=tdot, spacetime=spacetime)


def project_to_base(z, R: RandersMetric, null_tol: float = 1e-7) -> Trajectory:
    """Spatial part of a null-future spacetime curve, with consistency checks.

    Verifies that the input is lightlike and future pointing at the samples
    and that dt/ds matches F(x, x') to `null_tol`; otherwise raises a
    causal-character error.
    """
    traj = z.spacetime if isinstance(z, LiftedPath) else z
    x = traj.x[:, :-1]
    v = traj.v[:, :-1]
    tdot = traj.v[:, -1]
    f = np.asarray(evaluate(R, x, v, check_domain=False))
    scale = max(1.0, float(np.abs(tdot).max()))
    if np.any(tdot <= 0.0):
        raise CausalCharacterError("curve is not future pointing at all samples")
    dev = float(np.abs(tdot - f).max())
    if dev > null_tol * scale:
        raise CausalCharacterError(
            f"dt/ds deviates from F by {dev:.3e}; input is not a null-future lift"
        )
    out = Trajectory(s=traj.s.copy(), x=x.copy(), v=v.copy())
    out.logs.update(finsler_logs(R, out.x, out.v))
    return out


def lift_variation(R: RandersMetric, x: Trajectory, W: VariationField,
                   el_tol: float = 1e-5, route_tol: float = 1e-6,
                   lifted: LiftedPath = None) -> AdmissibleVariation:
    """Admissible spacetime variation generated by a base field W.

    The u-channel is produced by the closed form h(W, x')/|x'|_h + omega(W)
    with the logged h-speed in the denominator (a constant sequence for
    constant-h-speed input); the integral of F_q[W] + F_v[W'] along the
    curve is computed as an independent certificate and must agree to
    `route_tol`.  Both the certificate identity and the closed form are
    parametrization-invariant, so affine and constant-h-speed geodesics
    are both accepted; disagreement of the routes means x is not a
    geodesic at all.
    """
    if pregeodesic_residual(R, x) > el_tol:
        raise VariationConsistencyError(
            "variation lift requires a certified geodesic path"
        )
    hm = h_matrix(R, x.x)
    om = omega_covector(R, x.x)
    h_speed = x.logs.get("h_speed")
    if h_speed is None:
        h_speed = np.sqrt(np.einsum("...ij,...i,...j->...", hm, x.v, x.v))
    u = (
        np.einsum("...ij,...i,...j->...", hm, W.W, x.v) / h_speed
        + np.einsum("...i,...i->...", om, W.W)
    )
    # certificate route: cumulative integral of F_q[W] + F_v[W'] with the
    # field derivative taken on the grid
    j = jet(R, x.x, x.v, check_domain=False)
    Wdot = fd_derivative(W.W, x.s[1] - x.s[0])
    inv_2f = 0.5 / j.F
    integrand = inv_2f * (
        np.einsum("...i,...i->...", j.dq, W.W)
        + np.einsum("...i,...i->...", j.dv, Wdot)
    )
    u_int = cumulative_integral(integrand, x.s)
    scale = max(1.0, float(np.abs(u).max()))
    route_dev = float(np.abs(u - u_int).max())
    if route_dev > route_tol * scale:
        raise VariationConsistencyError(
            f"closed form and integral u-channels disagree by {route_dev:.3e}; "
            "the base curve is not a constant-h-speed geodesic"
        )
    z = lifted if lifted is not None else lightlike_lift(R, x)
    # admissibility g(z', U) = h(W, x') - (omega(W) - u)(omega(x') - t')
    om_x = np.einsum("...i,...i->...", om, x.v)
    g_con = (
        np.einsum("...ij,...i,...j->...", hm, W.W, x.v)
        - (np.einsum("...i,...i->...", om, W.W) - u) * (om_x - z.tdot)
    )
    return AdmissibleVariation(
        field=W,
        u=u,
        u_integral=u_int,
        lifted=z,
        max_constraint_violation=float(np.abs(g_con).max()),
        route_deviation=route_dev,
    )


def uhlenbeck_action(g: LorentzProduct, sigma: Trajectory) -> float:
    """Uhlenbeck's action: Simpson quadrature of g(s', s') + (dt/ds)^2.

    Defined for any spacetime curve with fixed start; on lightlike lifts it
    equals twice the Randers energy of the base curve.
    """
    gm = g.matrix_at(sigma.x[:, :-1])
    gzz = np.einsum("...ij,...i,...j->...", gm, sigma.v, sigma.v)
    return float(simpson_integral(gzz + sigma.v[:, -1] ** 2, sigma.s))


def variation_gram(R: RandersMetric, x: Trajectory,
                   fields: list) -> np.ndarray:
    """Discrete H^1 Gram matrix of lifted variations (injectivity probe).

    Inner product: integral of U.V + U'.V' with the Euclidean product on
    the chart coordinates of S x R.
    """
    h_grid = x.s[1] - x.s[0]
    lifted = lightlike_lift(R, x)
    us = []
    for W in fields:
        adm = lift_variation(R, x, W, lifted=lifted)
        U = np.concatenate([W.W, adm.u[:, None]], axis=1)
        us.append((U, fd_derivative(U, h_grid)))
    k = len(us)
    gram = np.empty((k, k))
    for a in range(k):
        Ua, dUa = us[a]
        for b in range(a, k):
            Ub, dUb = us[b]
            val = simpson_integral(
                np.einsum("qi,qi->q", Ua, Ub) + np.einsum("qi,qi->q", dUa, dUb),
                x.s,
            )
            gram[a, b] = gram[b, a] = val
    return gram
