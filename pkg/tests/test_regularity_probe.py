"""H1 grid, epsilon families, remainder residuals, scaling verdicts."""

import numpy as np
import pytest

from srcgeolab import (
    PathGridH10,
    Trajectory,
    build_epsilon_family,
    energy,
    energy_gateaux_hessian,
    energy_gradient,
    fit_scaling_exponent,
    frechet_residual,
    probe_metric,
    scan_residuals,
)
from srcgeolab.errors import DirectionDegeneracyError, RegularityError
from srcgeolab.regularity import EPS_GRID, energy_quadrature, witness_search

ZOO_RIEMANNIAN = ["euclidean", "sphere"]
ZOO_RANDERS = ["euclidean-wind", "sphere-wind", "radial-wind", "poly-bump",
               "stationary-basic"]


def chord(case, steps=1000):
    p, q = case.p, case.q
    return Trajectory.from_function(
        lambda s: p + s * (q - p), lambda s: q - p, steps, 2
    )


# -- PathGridH10 --------------------------------------------------------------


def test_hat_h1_norms_analytic():
    for N in (8, 32, 64):
        grid = PathGridH10(N)
        assert np.abs(grid.hat_h1_norms_sq() - 2.0 * N).max() < 1e-12


def test_grid_weights_sum_to_one():
    grid = PathGridH10(32)
    assert abs(grid.quad_w.sum() - 1.0) < 1e-14


# -- epsilon families ---------------------------------------------------------


def test_family_norm_identity():
    fam = build_epsilon_family([1.0, 0.0], [1.0, 0.0], 0.3, 0.25, ell=0.3)
    assert fam.eta_h1_norm == pytest.approx(0.4330127018922193, abs=1e-10)
    s = np.linspace(0.0, 1.0, 4001)
    ed = fam.eta_dot(s)
    grid_norm = np.sqrt(np.trapezoid(np.einsum("qi,qi->q", ed, ed), s))
    assert abs(grid_norm - fam.eta_h1_norm) < 1e-3  # chi sampled on a grid


def test_family_endpoints_exact():
    for eps in (0.01, 0.1, 0.19):
        fam = build_epsilon_family([0.3, -0.2], [0.1, 0.4], 0.35, eps)
        assert np.all(fam.eta(0.0) == 0.0)
        assert np.all(fam.eta(1.0) == 0.0)
        assert np.all(fam.xi(1.0) == 0.0)


def test_family_nesting():
    f1 = build_epsilon_family([1.0, 0.0], [1.0, 0.0], 0.3, 0.1)
    f2 = build_epsilon_family([1.0, 0.0], [1.0, 0.0], 0.3, 0.2, ell=0.25)
    a1, b1 = f1.interval
    a2, b2 = f2.interval
    assert a1 == a2 and b1 < b2  # left-anchored nesting


def test_family_epsilon_range_errors():
    with pytest.raises(ValueError):
        build_epsilon_family([1, 0], [1, 0], 0.3, 0.25)  # eps >= ell
    with pytest.raises(ValueError):
        build_epsilon_family([1, 0], [1, 0], 0.9, 0.1)  # J leaves [0, 1]
    with pytest.raises(ValueError):
        build_epsilon_family([0, 0], [1, 0], 0.3, 0.1)  # zero witness


# -- gradient and Gateaux Hessian --------------------------------------------


def test_gradient_vanishes_on_geodesic(euclid, euclid_line):
    grid = PathGridH10(32)
    assert np.abs(energy_gradient(euclid, euclid_line, grid)).max() < 1e-10


def test_gradient_matches_fd_on_parabola(euclid):
    par = Trajectory.from_function(
        lambda s: [s, s * (1 - s)], lambda s: [1.0, 1.0 - 2.0 * s], 1000, 2
    )
    grid = PathGridH10(24)
    grad = energy_gradient(euclid, par, grid)
    r = 1e-6
    fd = np.empty_like(grad)
    Q = len(grid.quad_s)
    for j in range(grid.N - 1):
        for a in range(2):
            dx = np.zeros((Q, 2))
            dx[:, a] = grid.phi[j]
            dv = np.zeros((Q, 2))
            dv[:, a] = grid.dphi[j]
            ep = energy_quadrature(euclid, par, grid, r * dx, r * dv)
            em = energy_quadrature(euclid, par, grid, -r * dx, -r * dv)
            fd[j * 2 + a] = (ep - em) / (2 * r)
    assert np.abs(grad - fd).max() / np.abs(fd).max() < 1e-5
    assert np.abs(grad).max() > 1e-3  # genuinely nonzero off criticality


def test_gradient_small_on_shot_wind_geodesic(registry, shot_cache):
    case = registry.case("euclidean-wind")
    traj = shot_cache("euclidean-wind")
    grid = PathGridH10(32)
    assert np.abs(energy_gradient(case.R, traj, grid)).max() < 1e-5


def test_gateaux_euclid_analytic(euclid, euclid_line):
    s = euclid_line.s
    xi = np.stack([np.zeros_like(s), np.sin(np.pi * s)], axis=-1)
    xid = np.stack([np.zeros_like(s), np.pi * np.cos(np.pi * s)], axis=-1)
    val = energy_gateaux_hessian(euclid, euclid_line, xi, xid, xi, xid)
    assert val == pytest.approx(np.pi ** 2 / 2.0, rel=1e-10)


def test_gateaux_symmetry(registry, shot_cache):
    case = registry.case("radial-wind")
    traj = shot_cache("radial-wind")
    rng = np.random.default_rng(27)
    s = traj.s
    for _ in range(5):
        a = rng.normal(0, 1, (2, 2))
        b = rng.normal(0, 1, (2, 2))
        xi = np.stack([a[0, 0] * np.sin(np.pi * s),
                       a[0, 1] * np.sin(2 * np.pi * s)], axis=-1)
        xid = np.stack([a[0, 0] * np.pi * np.cos(np.pi * s),
                        a[0, 1] * 2 * np.pi * np.cos(2 * np.pi * s)], axis=-1)
        eta = np.stack([b[0, 0] * np.sin(3 * np.pi * s),
                        b[0, 1] * np.sin(np.pi * s)], axis=-1)
        etad = np.stack([b[0, 0] * 3 * np.pi * np.cos(3 * np.pi * s),
                         b[0, 1] * np.pi * np.cos(np.pi * s)], axis=-1)
        v1 = energy_gateaux_hessian(case.R, traj, xi, xid, eta, etad)
        v2 = energy_gateaux_hessian(case.R, traj, eta, etad, xi, xid)
        assert abs(v1 - v2) < 1e-10 * max(1.0, abs(v1))


# -- residuals ----------------------------------------------------------------


@pytest.mark.parametrize("name", ZOO_RIEMANNIAN)
def test_riemannian_residual_zero(registry, name):
    case = registry.case(name)
    curve = chord(case)
    fam = build_epsilon_family([0.0, 0.2], [0.0, 0.2], 0.4, 0.05)
    res = frechet_residual(case.R, curve, fam)
    assert abs(res.value) < 1e-12
    assert res.route_agreement < 1e-15


def test_wind_residual_sign_definite(wind):
    curve = Trajectory.from_function(
        lambda s: [s, 0.0], lambda s: [1.0, 0.0], 1000, 2
    )
    values = []
    for eps in (0.02, 0.01, 0.005):
        fam = build_epsilon_family([0.0, 0.5], [0.0, 0.5], 0.3, eps)
        values.append(frechet_residual(wind, curve, fam).value)
    assert all(v != 0.0 for v in values)
    assert len(set(np.sign(values))) == 1


def test_residual_routes_agree(registry):
    case = registry.case("poly-bump")
    curve = chord(case)
    v, w, _ = witness_search(case.R, curve, 0.25)
    for eps in EPS_GRID[::4]:
        fam = build_epsilon_family(v, w, 0.15, float(eps))
        res = frechet_residual(case.R, curve, fam)
        assert res.route_agreement <= 1e-9 * max(1.0, abs(res.value))


def test_residual_velocity_floor(euclid):
    curve = Trajectory.from_function(
        lambda s: [s, 0.0], lambda s: [1.0, 0.0], 500, 2
    )
    # (1 - eps) * v cancels the curve velocity exactly on J_eps
    fam = build_epsilon_family([-1.0 / 0.9, 0.0], [1.0, 0.0], 0.3, 0.1)
    with pytest.raises(RegularityError):
        frechet_residual(euclid, curve, fam)


# -- scaling verdicts ---------------------------------------------------------


def test_fit_guards():
    with pytest.raises(ValueError):
        fit_scaling_exponent([0.1, 0.2, 0.3, 0.2, 0.15, 0.12],
                             np.ones(6))  # not decreasing
    with pytest.raises(ValueError):
        fit_scaling_exponent([0.1, 0.05], [1.0, 0.5])  # too few points


def test_probe_euclid_quadratic(registry):
    case = registry.case("euclidean")
    rep = probe_metric(case.R, chord(case), label="euclid")
    assert rep.verdict == "quadratic"
    assert rep.max_abs_residual < 1e-12
    assert rep.passed


@pytest.mark.parametrize("name", ZOO_RANDERS)
def test_probe_randers_linear(registry, name):
    case = registry.case(name)
    rep = probe_metric(case.R, chord(case), label=name, expect_linear=True)
    assert rep.verdict == "linear"
    assert 0.9 <= rep.slope <= 1.1
    assert rep.slope_spread <= 0.1
    assert rep.intercept > 0.0
    assert rep.passed


def test_probe_degenerate_direction_raises(registry):
    case = registry.case("euclidean")
    with pytest.raises(DirectionDegeneracyError):
        probe_metric(case.R, chord(case), expect_linear=True)


def test_scan_residuals_curve_shape(wind):
    curve = Trajectory.from_function(
        lambda s: [s, 0.0], lambda s: [1.0, 0.0], 1000, 2
    )
    curve_rep = scan_residuals(wind, curve, [0.0, 0.5], [0.0, 0.5], 0.4)
    assert curve_rep.verdict == "linear"
    assert len(curve_rep.eps) == 12
    assert np.all(np.diff(curve_rep.eps) < 0)
    assert 0.9 <= curve_rep.slope <= 1.1


def test_gateaux_matches_energy_fd_criterion(registry, shot_cache):
    """Criterion 7 piece: second differences of the energy at 1e-4."""
    case = registry.case("poly-bump")
    traj = shot_cache("poly-bump")
    s = traj.s
    xi = np.stack([0.3 * np.sin(np.pi * s), -0.2 * np.sin(2 * np.pi * s)],
                  axis=-1)
    xid = np.stack([0.3 * np.pi * np.cos(np.pi * s),
                    -0.4 * np.pi * np.cos(2 * np.pi * s)], axis=-1)
    form = energy_gateaux_hessian(case.R, traj, xi, xid, xi, xid)
    r = 1e-3
    ep = energy(case.R, Trajectory(s=s, x=traj.x + r * xi, v=traj.v + r * xid))
    em = energy(case.R, Trajectory(s=s, x=traj.x - r * xi, v=traj.v - r * xid))
    fd = (ep + em - 2 * energy(case.R, traj)) / (r * r)
    assert abs(form - fd) / abs(fd) < 1e-4
