"""Lightlike lifts, projection, variation lifts, Uhlenbeck action."""

import numpy as np
import pytest

from srcgeolab import (
    CausalClass,
    SpacetimeVector,
    Trajectory,
    VariationField,
    classify_causal,
    energy,
    integrate_finsler_geodesic,
    integrate_lorentz_geodesic,
    lift_variation,
    lightlike_lift,
    lorentz_el_residual,
    project_to_base,
    reparametrize_constant_h_speed,
    src_backward,
    uhlenbeck_action,
)
from srcgeolab.errors import CausalCharacterError, VariationConsistencyError
from srcgeolab.lift import variation_gram

ZOO_NAMES = ["euclidean", "euclidean-wind", "sphere", "sphere-wind",
             "radial-wind", "poly-bump", "stationary-basic"]


def test_lift_euclid_line(euclid, euclid_line):
    z = lightlike_lift(euclid, euclid_line, t0=0.0)
    assert np.abs(z.t - euclid_line.s).max() < 1e-12
    g = src_backward(euclid)
    mid = 500
    cls = classify_causal(
        g, z.spacetime.x[mid, :2],
        SpacetimeVector(z.spacetime.v[mid, :2], z.spacetime.v[mid, 2]),
    )
    assert cls is CausalClass.NULL_FUTURE


def test_lift_wind_time_channel(wind, wind_line):
    z = lightlike_lift(wind, wind_line)
    assert np.abs(z.t - 1.5 * wind_line.s).max() < 1e-12
    assert np.abs(z.spacetime.logs["g_zz"]).max() < 1e-14


def test_lift_nondecreasing_time(registry, shot_cache):
    for name in ["sphere-wind", "radial-wind"]:
        case = registry.case(name)
        traj = shot_cache(name)
        z = lightlike_lift(case.R, traj)
        assert np.all(np.diff(z.t) > 0)


def test_lift_certificate_sphere(sphere, sphere_equator_15):
    const = reparametrize_constant_h_speed(sphere_equator_15, sphere)
    z = lightlike_lift(sphere, const)
    field = src_backward(sphere).matrix_field()
    assert lorentz_el_residual(field, z.spacetime) < 1e-5
    assert np.ptp(z.spacetime.logs["g_zz"]) < 1e-9
    assert np.ptp(z.spacetime.logs["g_zt"]) < 1e-9


def test_project_round_trip(wind, wind_line):
    z = lightlike_lift(wind, wind_line)
    back = project_to_base(z, wind)
    assert np.array_equal(back.x, wind_line.x)
    assert np.array_equal(back.v, wind_line.v)


def test_project_minkowski_null_line(euclid):
    field = src_backward(euclid).matrix_field()
    traj = integrate_lorentz_geodesic(field, [0.0, 0.0, 0.0],
                                      [1.0, 0.0, 1.0], steps=500)
    base = project_to_base(traj, euclid)
    assert np.abs(base.v - [1.0, 0.0]).max() < 1e-12


def test_project_rejects_non_null(euclid):
    field = src_backward(euclid).matrix_field()
    traj = integrate_lorentz_geodesic(field, [0.0, 0.0, 0.0],
                                      [0.5, 0.0, 1.0], steps=200)  # timelike
    with pytest.raises(CausalCharacterError):
        project_to_base(traj, euclid)


def test_project_rejects_past_pointing(euclid, euclid_line):
    z = lightlike_lift(euclid, euclid_line)
    flipped = Trajectory(
        s=z.spacetime.s,
        x=z.spacetime.x * np.array([1.0, 1.0, -1.0]),
        v=z.spacetime.v * np.array([1.0, 1.0, -1.0]),
    )
    with pytest.raises(CausalCharacterError):
        project_to_base(flipped, euclid)


def test_variation_lift_zero_field(euclid, euclid_line):
    W = VariationField.from_callable(lambda s: [0.0, 0.0], euclid_line.s)
    adm = lift_variation(euclid, euclid_line, W)
    assert np.abs(adm.u).max() == 0.0


def test_variation_lift_transverse_sin(euclid, euclid_line):
    W = VariationField.from_callable(
        lambda s: [0.0, np.sin(np.pi * s)], euclid_line.s
    )
    adm = lift_variation(euclid, euclid_line, W)
    assert np.abs(adm.u).max() < 1e-12  # h(W, xdot) = 0 and omega = 0


def test_variation_lift_longitudinal(euclid, euclid_line):
    W = VariationField.from_callable(
        lambda s: [s * (1 - s), 0.0], euclid_line.s
    )
    adm = lift_variation(euclid, euclid_line, W)
    expected = euclid_line.s * (1 - euclid_line.s)
    assert np.abs(adm.u - expected).max() < 1e-12
    assert adm.route_deviation < 1e-6
    assert adm.u[0] == 0.0 and abs(adm.u[-1]) < 1e-15


def test_variation_lift_admissibility(registry, shot_cache):
    rng = np.random.default_rng(13)
    for name in ["sphere-wind", "radial-wind"]:
        case = registry.case(name)
        traj = reparametrize_constant_h_speed(shot_cache(name), case.R)
        coeffs = rng.normal(0.0, 0.2, (2, 3))

        def fn(s, c=coeffs):
            return [
                sum(c[a, k - 1] * np.sin(np.pi * k * s) for k in range(1, 4))
                for a in range(2)
            ]

        W = VariationField.from_callable(fn, traj.s)
        adm = lift_variation(case.R, traj, W)
        assert adm.max_constraint_violation < 1e-9
        assert adm.route_deviation < 1e-6 * max(1.0, np.abs(adm.u).max())


def test_variation_lift_rejects_non_geodesic(euclid):
    par = Trajectory.from_function(
        lambda s: [s, 0.3 * s * (1 - s)], lambda s: [1.0, 0.3 * (1 - 2 * s)],
        1000, 2,
    )
    W = VariationField.from_callable(lambda s: [0.0, np.sin(np.pi * s)], par.s)
    with pytest.raises(VariationConsistencyError):
        lift_variation(euclid, par, W)


def test_variation_field_requires_vanishing_endpoints():
    s = np.linspace(0.0, 1.0, 101)
    W = np.ones((101, 2))
    with pytest.raises(ValueError):
        VariationField(s=s, W=W)


def test_uhlenbeck_minkowski_values(euclid, euclid_line):
    g = src_backward(euclid)
    z = lightlike_lift(euclid, euclid_line)
    assert uhlenbeck_action(g, z.spacetime) == pytest.approx(1.0, rel=1e-12)
    faster = integrate_finsler_geodesic(euclid, [0.0, 0.0], [2.0, 0.0],
                                        steps=500)
    z2 = lightlike_lift(euclid, faster)
    assert uhlenbeck_action(g, z2.spacetime) == pytest.approx(4.0, rel=1e-12)


def test_uhlenbeck_wind_value(wind, wind_line):
    g = src_backward(wind)
    z = lightlike_lift(wind, wind_line)
    J = uhlenbeck_action(g, z.spacetime)
    assert J == pytest.approx(2.25, rel=1e-12)
    assert J == pytest.approx(2 * energy(wind, wind_line), rel=1e-12)


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_action_identity_off_shell(registry, name):
    """J(lift(curve)) = 2 E(curve) for random non-geodesic regular curves."""
    case = registry.case(name)
    g = case.product
    rng = np.random.default_rng(hash(name) % 2 ** 31)
    p, q = case.p, case.q
    for _ in range(10):
        amp = rng.normal(0.0, 0.08, (2, 3))

        def fn(s):
            base = p + s * (q - p)
            wiggle = sum(
                amp[:, k - 1] * np.sin(np.pi * k * s) for k in range(1, 4)
            )
            return base + wiggle

        def dfn(s):
            base = q - p
            wiggle = sum(
                amp[:, k - 1] * np.pi * k * np.cos(np.pi * k * s)
                for k in range(1, 4)
            )
            return base + wiggle

        curve = Trajectory.from_function(fn, dfn, 500, 2)
        z = lightlike_lift(case.R, curve)
        J = uhlenbeck_action(g, z.spacetime)
        E2 = 2 * energy(case.R, curve)
        assert abs(J - E2) / abs(E2) < 1e-8


def test_variation_gram_nonsingular(euclid, euclid_line):
    fields = [
        VariationField.from_callable(
            lambda s, k=k, a=a: [np.sin(np.pi * k * s) * (a == 0),
                                 np.sin(np.pi * k * s) * (a == 1)],
            euclid_line.s,
        )
        for k in range(1, 4)
        for a in range(2)
    ]
    gram = variation_gram(euclid, euclid_line, fields)
    cond = np.linalg.cond(gram)
    assert np.isfinite(cond)
    assert np.linalg.matrix_rank(gram) == len(fields)


def test_lift_csv_schema(tmp_path, wind, wind_line):
    z = lightlike_lift(wind, wind_line)
    path = tmp_path / "lift.csv"
    z.to_csv(path)
    header = path.read_text().split("\n", 1)[0]
    assert header == "s,x1,x2,t,v1,v2,vt,g_zt,g_zz"
