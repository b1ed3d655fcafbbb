"""Linearized geodesic flows (Jacobi equations) for both metric types.

The geodesic equation is linearized around a computed trajectory; the
coefficient matrices A(s) = da/dx and B(s) = da/dv come from third-order
jets (Finsler side) or metric second derivatives (Lorentzian side).  The
matrix solution with Y(0) = 0, Y'(0) = Id is integrated with RK4 on the
trajectory's own grid, coefficients evaluated at nodes and midpoints via
O(h^4) Hermite interpolation of the base states, so bracketing of det Y
zeros stays deterministic and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .finsler import RandersMetric, jet3
from .numerics import hermite_segment
from .trajectory import Trajectory


@dataclass
class LinearizedFlow:
    """Matrix Jacobi solution along a geodesic, with dense output."""

    s: np.ndarray            # grid
    Y: np.ndarray            # (N+1, k, k) solution blocks, Y(0) = 0
    Yd: np.ndarray           # derivative blocks, Yd(0) = Id
    A: np.ndarray            # coefficient matrices at nodes (for dense output)
    B: np.ndarray
    kind: str                # "finsler" | "lorentz"

    @property
    def dim(self) -> int:
        return self.Y.shape[-1]

    def det(self) -> np.ndarray:
        return np.linalg.det(self.Y)

    def evaluate(self, s_query):
        """Dense Y(s), Yd(s) by cubic Hermite on the stored solution."""
        h = self.s[1] - self.s[0]
        sq = np.atleast_1d(np.asarray(s_query, dtype=float))
        idx = np.clip(((sq - self.s[0]) / h).astype(int), 0, len(self.s) - 2)
        theta = (sq - self.s[idx]) / h
        ydd = np.einsum("kij,kjl->kil", self.A, self.Y) + np.einsum(
            "kij,kjl->kil", self.B, self.Yd
        )
        Yq, _ = hermite_segment(
            theta, h, self.Y[idx], self.Y[idx + 1], self.Yd[idx], self.Yd[idx + 1]
        )
        Ydq, _ = hermite_segment(
            theta, h, self.Yd[idx], self.Yd[idx + 1], ydd[idx], ydd[idx + 1]
        )
        if np.ndim(s_query) == 0:
            return Yq[0], Ydq[0]
        return Yq, Ydq


def _midpoint_states(traj: Trajectory, accel_nodes: np.ndarray):
    """Base states at cell midpoints via Hermite (O(h^4))."""
    h = traj.s[1] - traj.s[0]
    theta = 0.5
    x_mid, _ = hermite_segment(theta, h, traj.x[:-1], traj.x[1:],
                               traj.v[:-1], traj.v[1:])
    v_mid, _ = hermite_segment(theta, h, traj.v[:-1], traj.v[1:],
                               accel_nodes[:-1], accel_nodes[1:])
    return x_mid, v_mid


def finsler_variational_coeffs(R: RandersMetric, traj: Trajectory):
    """A = da/dx and B = da/dv along the curve, at nodes and midpoints.

    The acceleration solves dvv a = dq - dqv^T v; its derivative blocks
    follow from the third-order jet by implicit differentiation of that
    linear system.
    """
    n = traj.dim

    def coeffs(x, v):
        j3 = jet3(R, x, v)
        j = j3.jet
        a = np.linalg.solve(
            j.dvv, (j.dq - np.einsum("...ji,...j->...i", j.dqv, v))[..., None]
        )[..., 0]
        # d(rhs)/dx[e, i] and the dM/dx[e] a correction
        dr_dx = (
            j.dqq
            - np.einsum("...ejy,...j->...ey", j3.dqqv, v)
            - np.einsum("...eiy,...i->...ey", j3.dqvv, a)
        )
        dr_dv = (
            np.einsum("...ie->...ei", j.dqv)
            - np.einsum("...jye,...j->...ey", j3.dqvv, v)
            - j.dqv
            - np.einsum("...iye,...i->...ey", j3.dvvv, a)
        )
        # batch the e-indexed right-hand sides through one symmetric solve
        sol_x = np.linalg.solve(j.dvv[..., None, :, :], dr_dx[..., None])[..., 0]
        sol_v = np.linalg.solve(j.dvv[..., None, :, :], dr_dv[..., None])[..., 0]
        # sol[..., e, y] = da_y/dp_e; transpose to matrices acting on deltas
        return np.swapaxes(sol_x, -1, -2), np.swapaxes(sol_v, -1, -2), a

    A_n, B_n, a_n = coeffs(traj.x, traj.v)
    x_m, v_m = _midpoint_states(traj, a_n)
    A_m, B_m, _ = coeffs(x_m, v_m)
    return A_n, B_n, A_m, B_m


def lorentz_variational_coeffs(ode, traj: Trajectory):
    """Same coefficient blocks for the Levi-Civita geodesic equation."""
    gamma_n, dgamma_n = ode.christoffel_with_grad(traj.x)
    accel_n = -np.einsum("...abc,...b,...c->...a", gamma_n, traj.v, traj.v)
    x_m, v_m = _midpoint_states(traj, accel_n)
    gamma_m, dgamma_m = ode.christoffel_with_grad(x_m)

    def blocks(gamma, dgamma, v):
        A = -np.einsum("...eabc,...b,...c->...ae", dgamma, v, v)
        B = -2.0 * np.einsum("...aec,...c->...ae", gamma, v)
        return A, B

    A_n, B_n = blocks(gamma_n, dgamma_n, traj.v)
    A_m, B_m = blocks(gamma_m, dgamma_m, v_m)
    return A_n, B_n, A_m, B_m


def integrate_linear_flow(s, A_n, B_n, A_m, B_m, Y0=None, Yd0=None,
                          kind="finsler") -> LinearizedFlow:
    """RK4 for the linear matrix system Y'' = A(s) Y + B(s) Y'."""
    steps = len(s) - 1
    k = A_n.shape[-1]
    dt = s[1] - s[0]
    Y = np.empty((steps + 1, k, k))
    Yd = np.empty((steps + 1, k, k))
    Y[0] = np.zeros((k, k)) if Y0 is None else Y0
    Yd[0] = np.eye(k) if Yd0 is None else Yd0

    def rhs(A, B, y, yd):
        return yd, A @ y + B @ yd

    for i in range(steps):
        y, yd = Y[i], Yd[i]
        k1y, k1d = rhs(A_n[i], B_n[i], y, yd)
        k2y, k2d = rhs(A_m[i], B_m[i], y + 0.5 * dt * k1y, yd + 0.5 * dt * k1d)
        k3y, k3d = rhs(A_m[i], B_m[i], y + 0.5 * dt * k2y, yd + 0.5 * dt * k2d)
        k4y, k4d = rhs(A_n[i + 1], B_n[i + 1], y + dt * k3y, yd + dt * k3d)
        Y[i + 1] = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        Yd[i + 1] = yd + dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)

    return LinearizedFlow(s=np.asarray(s), Y=Y, Yd=Yd, A=A_n, B=B_n, kind=kind)


def finsler_linearized_flow(R: RandersMetric, traj: Trajectory,
                            Y0=None, Yd0=None) -> LinearizedFlow:
    A_n, B_n, A_m, B_m = finsler_variational_coeffs(R, traj)
    return integrate_linear_flow(traj.s, A_n, B_n, A_m, B_m, Y0, Yd0,
                                 kind="finsler")


def lorentz_linearized_flow(ode, traj: Trajectory,
                            Y0=None, Yd0=None) -> LinearizedFlow:
    A_n, B_n, A_m, B_m = lorentz_variational_coeffs(ode, traj)
    return integrate_linear_flow(traj.s, A_n, B_n, A_m, B_m, Y0, Yd0,
                                 kind="lorentz")
