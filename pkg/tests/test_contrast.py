import numpy as np
import pytest
from scipy.optimize import minimize

from hypocontrast import get_model
from hypocontrast.contrast import (
    ContrastObjective,
    contrast_gradient,
    contrast_value,
    step_terms,
    taylor_arrays,
    taylor_coeffs,
)
from hypocontrast.moments import (
    CovExpansion,
    NotPositiveDefinite,
    corrections_array,
    make_config,
    mean_expansion,
    residual_array,
    sigma0_array,
)
from hypocontrast.oracle import fd_gradient
from hypocontrast.simulate import ObservationDesign, simulate_observations


def _cov(S, corr):
    S = np.atleast_2d(S)
    return CovExpansion(S, {}, np.linalg.inv(S), [np.atleast_2d(c) for c in corr])


def test_scalar_taylor_coefficients():
    tc = taylor_coeffs(_cov(2.0, [1.0]), 1)
    assert tc.G[0][0, 0] == 0.5
    assert tc.G[1][0, 0] == -0.25
    assert tc.H[0] == pytest.approx(np.log(2))
    assert tc.H[1] == pytest.approx(0.5)


def test_second_order_formulas():
    rng = np.random.default_rng(0)
    B = rng.normal(size=(3, 3))
    S = B @ B.T + 3 * np.eye(3)
    S1 = rng.normal(size=(3, 3))
    S1 = S1 + S1.T
    S2 = rng.normal(size=(3, 3))
    S2 = S2 + S2.T
    tc = taylor_coeffs(_cov(S, [S1, S2]), 2)
    L = np.linalg.inv(S)
    G1 = -L @ S1 @ L
    np.testing.assert_allclose(tc.G[1], G1, atol=1e-13)
    np.testing.assert_allclose(tc.G[2], -(G1 @ S1 + L @ S2) @ L, atol=1e-13)
    assert tc.H[1] == pytest.approx(np.trace(L @ S1), rel=1e-13)
    assert tc.H[2] == pytest.approx(np.trace(0.5 * G1 @ S1 + L @ S2), rel=1e-13)
    for G in tc.G:
        np.testing.assert_allclose(G, G.T, atol=1e-13)


def test_vanishing_corrections_give_zero_terms():
    tc = taylor_coeffs(_cov(np.diag([1.0, 4.0]), [np.zeros((2, 2))] * 2), 2)
    for k in (1, 2):
        assert not np.any(tc.G[k])
        assert tc.H[k] == 0.0


def test_missing_correction_is_unsupported():
    with pytest.raises(Exception, match="Sigma_1..Sigma_2"):
        taylor_arrays(np.eye(2), 0.0, [np.eye(2)], 2, np)


def _langevin_one_step(m_vec, delta=0.01, p=2):
    m = get_model("langevin-quad")
    th = np.array([-1.0, 2.0])
    x0 = np.array([0.3, -0.1])
    r = mean_expansion(m, make_config(m, p), delta, x0, th).r
    x1 = r + np.array([delta**1.5, delta**0.5]) * m_vec
    return m, th, np.stack([x0, x1]), delta


def test_zero_residual_contrast_is_logdet():
    m, th, X, d = _langevin_one_step(np.zeros(2))
    v = contrast_value(m, make_config(m, 2), (X, d), th).value
    assert v == pytest.approx(np.log(4 / 3), rel=1e-12)


def test_langevin_one_step_by_hand():
    m, th, X, d = _langevin_one_step(np.array([1.0, 0.0]))
    v = contrast_value(m, make_config(m, 2), (X, d), th).value
    assert v == pytest.approx(3 + np.log(4 / 3), rel=1e-10)


@pytest.fixture(scope="module")
def fhn_data():
    m = get_model("fhn")
    return m, simulate_observations(m, m.true_theta, ObservationDesign(0.01, 400, 1e-3, 5))[0]


def test_p3_minus_p2_is_first_order_slice(fhn_data):
    m, obs = fhn_data
    th = np.array([0.12, 1.3, 0.35, 0.5])
    X, d = obs.states, obs.delta
    l2 = contrast_value(m, make_config(m, 2), obs, th).value
    l3 = contrast_value(m, make_config(m, 3), obs, th).value
    mres = np.asarray(residual_array(m, 1, d, X[:-1], X[1:], th))
    S = np.asarray(sigma0_array(m, X[:-1], th))
    lam = np.linalg.inv(S)
    S1 = np.asarray(corrections_array(m, 1, X[:-1], th)[0])
    G1 = -lam @ S1 @ lam
    H1 = np.trace(lam @ S1, axis1=-2, axis2=-1)
    extra = d * np.sum(np.einsum("ni,nij,nj->n", mres, G1, mres) + H1)
    assert l3 - l2 == pytest.approx(extra, rel=1e-9, abs=1e-9)


def test_thread_count_does_not_change_value(fhn_data):
    m, obs = fhn_data
    cfg = make_config(m, 4)
    a = contrast_value(m, cfg, obs, m.true_theta, jobs=1).value
    b = contrast_value(m, cfg, obs, m.true_theta, jobs=4).value
    assert a == pytest.approx(b, rel=1e-12)


def test_numpy_and_compiled_paths_agree(fhn_data):
    m, obs = fhn_data
    for p in (2, 3, 4):
        cfg = make_config(m, p)
        v, ok = ContrastObjective(m, cfg, obs).value(m.true_theta)
        assert ok
        assert v == pytest.approx(contrast_value(m, cfg, obs, m.true_theta).value, rel=1e-12)


def test_non_pd_names_step_and_sentinel(fhn_data):
    m, obs = fhn_data
    th = np.array([0.1, 1.5, 0.3, 0.0])
    with pytest.raises(NotPositiveDefinite, match="step 1"):
        contrast_value(m, make_config(m, 2), obs, th)
    v, ok = ContrastObjective(m, make_config(m, 2), obs).value(th)
    assert not ok and v >= 1e299


def test_keep_terms(fhn_data):
    m, obs = fhn_data
    cv = contrast_value(m, make_config(m, 3), obs, m.true_theta, keep_terms=True)
    assert cv.per_step_terms.shape == (obs.design.n,)
    t, ok = step_terms(m, 3, obs.delta, obs.states, np.asarray(m.true_theta), np)
    assert ok.all()
    np.testing.assert_allclose(cv.per_step_terms, t)


@pytest.mark.parametrize("mid", ["langevin-dw", "qgle-dw", "fhn"])
def test_gradient_matches_finite_differences(mid):
    m = get_model(mid)
    obs = simulate_observations(m, m.true_theta, ObservationDesign(0.01, 100, 1e-3, 2))[0]
    cfg = make_config(m, m.max_p)
    th = 0.9 * np.asarray(m.true_theta)
    g = contrast_gradient(m, cfg, obs, th)
    fd = fd_gradient(lambda t: contrast_value(m, cfg, obs, t).value, th, 1e-5)
    np.testing.assert_allclose(g, fd, rtol=1e-5)


def test_directional_derivative(fhn_data):
    m, obs = fhn_data
    cfg = make_config(m, 4)
    th = np.array([0.11, 1.4, 0.28, 0.62])
    obj = ContrastObjective(m, cfg, obs)
    _, g, _ = obj(th)
    v = np.random.default_rng(3).normal(size=4)
    v /= np.linalg.norm(v)
    t = 1e-6
    fd = (obj.value(th + t * v)[0] - obj.value(th - t * v)[0]) / (2 * t)
    assert fd == pytest.approx(g @ v, rel=1e-6)


def test_gradient_vanishes_at_stationary_point():
    m = get_model("langevin-dw")
    obs = simulate_observations(m, m.true_theta, ObservationDesign(0.01, 2000, 1e-3, 8))[0]
    obj = ContrastObjective(m, make_config(m, 3), obs)
    res = minimize(lambda t: obj(t)[:2], np.asarray(m.true_theta), jac=True, method="BFGS",
                   options={"gtol": 1e-9})
    v, g, ok = obj(res.x)
    assert ok
    assert np.max(np.abs(g)) < 1e-6 * (1 + abs(v))


@pytest.fixture(scope="module")
def qgle_desk():
    m = get_model("qgle-quad")
    design = ObservationDesign(0.005, 10_000, 1e-4, 100)
    return m, simulate_observations(m, m.true_theta, design, replications=20)


def test_contrast_prefers_true_sigma(qgle_desk):
    m, sets = qgle_desk
    cfg = make_config(m, 3)
    th = np.asarray(m.true_theta)
    up = th + 0.25 * np.eye(4)[3]
    wins = sum(contrast_value(m, cfg, o, th).value < contrast_value(m, cfg, o, up).value for o in sets)
    assert wins >= 18


def test_sigma_gradient_positive_beyond_truth(qgle_desk):
    m, sets = qgle_desk
    cfg = make_config(m, 3)
    th = np.asarray(m.true_theta) * np.array([1, 1, 1, 1.5])
    pos = sum(contrast_gradient(m, cfg, o, th)[3] > 0 for o in sets)
    assert pos >= 18
