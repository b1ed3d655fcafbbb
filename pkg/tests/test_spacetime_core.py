"""Stationary data, correspondence maps, causal classification."""

import numpy as np
import pytest
from scipy.optimize import brentq

from srcgeolab import (
    CausalClass,
    ChartDomain,
    OneFormField,
    RiemannianField,
    SpacetimeVector,
    StationaryData,
    classify_causal,
    conformal_rescale,
    evaluate,
    evaluate_metric,
    src_backward,
    src_forward,
    validate,
)
from srcgeolab.errors import InvalidStationaryError, NumericalError
from srcgeolab.finsler import h_matrix, omega_covector
from srcgeolab.spacetime import as_stationary_data

DOM = ChartDomain(bounds=((-5.0, 5.0), (-5.0, 5.0)))
EYE = RiemannianField(lambda x: [[1.0, 0.0], [0.0, 1.0]])
ZOO_NAMES = ["euclidean", "euclidean-wind", "sphere", "sphere-wind",
             "radial-wind", "poly-bump", "stationary-basic"]


def stationary(g0=None, w=None, beta=None):
    return StationaryData(
        domain=DOM,
        g0=g0 or EYE,
        w=w or OneFormField(lambda x: [0.0, 0.0]),
        beta=beta or (lambda x: 1.0),
    )


def test_src_forward_trivial():
    R = src_forward(stationary(), samples=[[0.0, 0.0]])
    assert np.allclose(h_matrix(R, np.zeros(2)), np.eye(2))
    assert np.allclose(omega_covector(R, np.zeros(2)), 0.0)


def test_src_forward_pure_rescale():
    R = src_forward(stationary(beta=lambda x: 4.0))
    assert np.allclose(h_matrix(R, np.zeros(2)), np.eye(2) / 4.0)
    assert np.allclose(omega_covector(R, np.zeros(2)), 0.0)


def test_src_forward_strong_wind_still_randers():
    data = stationary(w=OneFormField(lambda x: [2.0, 0.0]))
    R = src_forward(data, samples=[[0.0, 0.0], [1.0, 1.0]])
    assert np.allclose(h_matrix(R, np.zeros(2)), [[5.0, 0.0], [0.0, 1.0]])
    assert np.allclose(omega_covector(R, np.zeros(2)), [2.0, 0.0])
    rep = validate(R, np.random.default_rng(1).uniform(-4, 4, (100, 2)))
    assert rep.passed
    assert rep.max_omega_norm == pytest.approx(2.0 / np.sqrt(5.0), rel=1e-12)


def test_src_forward_rejects_bad_beta():
    with pytest.raises(InvalidStationaryError):
        src_forward(stationary(beta=lambda x: x[0]), samples=[[-1.0, 0.0]])


def test_src_backward_minkowski(euclid):
    g = src_backward(euclid)
    assert np.allclose(g.matrix_at(np.zeros(2)),
                       np.diag([1.0, 1.0, -1.0]))


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_backward_forward_round_trip(registry, name):
    R = registry.case(name).R
    g = src_backward(R)
    R2 = src_forward(as_stationary_data(g))
    rng = np.random.default_rng(4)
    xs = R.domain.sample(100, rng)
    assert np.abs(h_matrix(R2, xs) - h_matrix(R, xs)).max() < 1e-12
    assert np.abs(omega_covector(R2, xs) - omega_covector(R, xs)).max() < 1e-12


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_signature_one_negative_eigenvalue(registry, name):
    g = registry.case(name).product
    rng = np.random.default_rng(9)
    pts = g.domain.sample(200, rng)
    eigs = np.linalg.eigvalsh(g.matrix_at(pts))
    assert np.all((eigs < 0.0).sum(axis=-1) == 1)


def test_g_eval_examples(euclid, wind):
    mink = src_backward(euclid)
    t_dir = SpacetimeVector([0.0, 0.0], 1.0)
    assert evaluate_metric(mink, [0.0, 0.0], t_dir, t_dir) == pytest.approx(-1.0)
    null = SpacetimeVector([1.0, 0.0], 1.0)
    assert evaluate_metric(mink, [0.0, 0.0], null, null) == pytest.approx(0.0)
    gw = src_backward(wind)
    for tau, expected in [(1.5, 0.0), (-0.5, 0.0), (0.5, 1.0 - 0.0)]:
        A = SpacetimeVector([1.0, 0.0], tau)
        val = evaluate_metric(gw, [0.0, 0.0], A, A)
        assert val == pytest.approx(1.0 - (0.5 - tau) ** 2, abs=1e-14)
        if expected == 0.0:
            assert abs(val) < 1e-14


def test_g_eval_matches_matrix_form(registry):
    rng = np.random.default_rng(12)
    for name in ZOO_NAMES:
        g = registry.case(name).product
        for _ in range(20):
            p = g.domain.sample(1, rng)[0]
            A = SpacetimeVector(rng.normal(size=2), rng.normal())
            B = SpacetimeVector(rng.normal(size=2), rng.normal())
            direct = evaluate_metric(g, p, A, B, check_domain=False)
            mat = g.matrix_at(p)
            assert direct == pytest.approx(
                float(A.full @ mat @ B.full), rel=1e-14, abs=1e-14
            )


def test_classify_examples(euclid, wind):
    mink = src_backward(euclid)
    assert classify_causal(mink, [0, 0], SpacetimeVector([1.0, 0.0], 1.0)) \
        is CausalClass.NULL_FUTURE
    assert classify_causal(mink, [0, 0], SpacetimeVector([0.3, -0.4], 0.0)) \
        is CausalClass.SPACELIKE
    assert classify_causal(mink, [0, 0], SpacetimeVector([0.0, 0.0], 0.0)) \
        is CausalClass.ZERO
    assert classify_causal(mink, [0, 0], SpacetimeVector([0.0, 0.0], -2.0)) \
        is CausalClass.TIMELIKE_PAST
    gw = src_backward(wind)
    assert classify_causal(gw, [0, 0], SpacetimeVector([1.0, 0.0], 1.5)) \
        is CausalClass.NULL_FUTURE
    assert classify_causal(gw, [0, 0], SpacetimeVector([1.0, 0.0], -0.5)) \
        is CausalClass.NULL_PAST
    # between the roots the metric value 1 - (0.5 - tau)^2 is positive
    assert classify_causal(gw, [0, 0], SpacetimeVector([1.0, 0.0], 0.5)) \
        is CausalClass.SPACELIKE
    assert classify_causal(gw, [0, 0], SpacetimeVector([1.0, 0.0], 2.5)) \
        is CausalClass.TIMELIKE_FUTURE
    assert classify_causal(gw, [0, 0], SpacetimeVector([1.0, 0.0], -1.5)) \
        is CausalClass.TIMELIKE_PAST


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_null_cone_roots_property(registry, name):
    """(v, F(p, v)) is null-future and (v, -F(p, -v)) null-past, 1000 draws."""
    case = registry.case(name)
    g = case.product
    R = case.R
    rng = np.random.default_rng(31)
    pts = g.domain.sample(1000, rng)
    vs = rng.normal(0.0, 1.0, pts.shape)
    vs += 0.3 * np.sign(vs)
    f_plus = evaluate(R, pts, vs, check_domain=False)
    f_minus = evaluate(R, pts, -vs, check_domain=False)
    for k in range(0, 1000, 37):  # spot-check classification on a sample
        A = SpacetimeVector(vs[k], float(f_plus[k]))
        B = SpacetimeVector(vs[k], -float(f_minus[k]))
        assert classify_causal(g, pts[k], A) is CausalClass.NULL_FUTURE
        assert classify_causal(g, pts[k], B) is CausalClass.NULL_PAST


def test_conformal_rescale_identity_and_classification(wind):
    g = src_backward(wind)
    field1 = conformal_rescale(g, lambda x: 1.0)
    base = g.matrix_field()
    rng = np.random.default_rng(2)
    for _ in range(10):
        z = np.append(rng.uniform(-2, 2, 2), rng.normal())
        assert np.allclose(field1.at(z), base.at(z), atol=1e-15)
    field4 = conformal_rescale(g, lambda x: 4.0)
    for _ in range(50):
        p = rng.uniform(-2, 2, 2)
        v = rng.normal(size=2)
        tau = rng.normal()
        A = np.append(v, tau)
        s_base = np.sign(A @ base.at(np.append(p, 0.0)) @ A)
        s_resc = np.sign(A @ field4.at(np.append(p, 0.0)) @ A)
        assert s_base == s_resc


def test_conformal_rescale_null_cone_roots(wind):
    """Root-finding oracle: null cones of g and lambda*g coincide."""
    g = src_backward(wind)
    lam = lambda x: 1.0 + (x[0] * x[0] + x[1] * x[1]) / 4.0
    field = conformal_rescale(g, lam)
    base = g.matrix_field()
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = rng.uniform(-2.0, 2.0, 2)
        v = rng.normal(size=2)

        def null_value(metric, tau):
            z = np.append(p, 0.0)
            A = np.append(v, tau)
            return float(A @ metric.at(z) @ A)

        hi = 10.0 * (np.linalg.norm(v) + 1.0)
        r_base = brentq(lambda t: null_value(base, t), 0.0, hi, xtol=1e-14)
        r_resc = brentq(lambda t: null_value(field, t), 0.0, hi, xtol=1e-14)
        assert abs(r_base - r_resc) < 1e-12


def test_conformal_rescale_rejects_nonpositive(wind):
    g = src_backward(wind)
    with pytest.raises(NumericalError):
        conformal_rescale(g, lambda x: x[0], samples=[[-1.0, 0.0]])


def test_src_forward_conformal_invariance():
    """Rescaling (g0, w, beta) by lambda(x) leaves the Randers data fixed."""
    lam = lambda x: 1.0 + 0.25 * (x[0] * x[0] + x[1] * x[1])
    base = stationary(
        w=OneFormField(lambda x: [0.3 + 0.1 * x[1], 0.1 * x[0]]),
        beta=lambda x: 1.0 + 0.1 * x[0] * x[0],
    )
    scaled = StationaryData(
        domain=DOM,
        g0=RiemannianField(
            lambda x: [[lam(x) * e for e in row] for row in base.g0(x)]
        ),
        w=OneFormField(lambda x: [lam(x) * c for c in base.w(x)]),
        beta=lambda x: lam(x) * base.beta(x),
    )
    R1 = src_forward(base)
    R2 = src_forward(scaled)
    rng = np.random.default_rng(21)
    xs = DOM.sample(200, rng)
    assert np.abs(h_matrix(R1, xs) - h_matrix(R2, xs)).max() < 1e-12
    assert np.abs(
        omega_covector(R1, xs) - omega_covector(R2, xs)
    ).max() < 1e-12
