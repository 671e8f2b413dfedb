import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import solve_continuous_lyapunov

from hypocontrast import ModelError, get_model
from hypocontrast.moments import make_config, mean_expansion, residual_divisors, sigma0_array
from hypocontrast.oracle import linear_form, linear_sde_exact_moments
from hypocontrast.simulate import (
    ObservationDesign,
    SimulationError,
    read_observations,
    simulate_fine_path,
    simulate_lg_step,
    simulate_observations,
    simulate_paths,
    subsample,
    write_observations,
)


def test_zero_noise_step_is_order_two_mean():
    for mid in ("fhn", "qgle-dw", "langevin-dw"):
        m = get_model(mid)
        x = np.linspace(-0.5, 0.7, m.mclass.N)
        got = simulate_lg_step(m, x, m.true_theta, 0.005, np.zeros(m.mclass.N))
        want = mean_expansion(m, make_config(m, 2), 0.005, x, m.true_theta).r
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)


def test_fhn_step_tends_to_identity():
    m = get_model("fhn")
    x = np.array([0.4, -0.2])
    got = simulate_lg_step(m, x, m.true_theta, 1e-12, np.zeros(2))
    np.testing.assert_allclose(got, x, atol=1e-9)


def test_step_guard_and_noise_shape():
    m = get_model("langevin-quad")
    with pytest.raises(ModelError, match="h <= 0.01"):
        simulate_lg_step(m, [0.0, 0.0], m.true_theta, 0.02, [0.0, 0.0])
    with pytest.raises(ModelError, match="noise"):
        simulate_lg_step(m, [0.0, 0.0], m.true_theta, 0.01, [0.0])
    with pytest.raises(ModelError, match="factorisable"):
        simulate_lg_step(m, [0.0, 0.0], (-1.0, 0.0), 0.01, [0.0, 0.0])


def test_langevin_one_step_covariance_by_hand():
    m = get_model("langevin-quad")
    sig, h = 1.3, 0.01
    x = np.array([0.2, -0.4])
    noise = np.random.default_rng(0).standard_normal((100_000, 2))
    steps = simulate_lg_step(m, np.broadcast_to(x, (100_000, 2)), (-1.0, sig), h, noise)
    want = sig**2 * np.array([[h**3 / 3, h**2 / 2], [h**2 / 2, h]])
    c = steps - steps.mean(axis=0)
    prods = np.einsum("ni,nj->nij", c, c)
    emp = prods.mean(axis=0)
    se = prods.std(axis=0) / np.sqrt(len(c))
    assert np.all(np.abs(emp - want) < 3 * se)


def _ode_gap(h):
    m = get_model("langevin-quad")
    th = (-0.5, 0.0)
    x0 = np.array([1.0, 0.3])
    path = simulate_fine_path(m, th, ObservationDesign(h, int(round(1 / h)), h, 0, burn_in=0.0), x0=x0)
    ref = solve_ivp(lambda t, y: np.asarray(m.drift(y, np.asarray(th))), (0, 1), x0, method="DOP853",
                    rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(path[0], x0)
    return np.abs(path[-1] - ref.y[:, -1]).max()


def test_zero_diffusion_path_follows_ode():
    # the p=2 rough mean is an Euler step, so the deterministic path is first order
    e1, e2 = _ode_gap(1e-4), _ode_gap(5e-5)
    assert e1 < 1e-4
    assert 1.8 < e1 / e2 < 2.2


def test_same_seed_bitwise_identical_and_batch_invariant():
    m = get_model("qgle-dw")
    d = ObservationDesign(0.01, 300, 1e-3, 11, burn_in=1.0)
    a = simulate_paths(m, m.true_theta, d, replications=3)
    b = simulate_paths(m, m.true_theta, d, replications=3)
    assert np.array_equal(a, b)
    c = simulate_paths(m, m.true_theta, d, replications=1, first_index=2)
    assert np.array_equal(a[2], c[0])
    obs = simulate_observations(m, m.true_theta, d, replications=2)
    assert [o.design.seed for o in obs] == [11, 12]


def test_explosion_guard():
    m = get_model("langevin-quad")
    with pytest.raises(SimulationError, match="exploded"):
        simulate_paths(m, (5.0, 1.0), ObservationDesign(0.01, 2000, 1e-3, 0, burn_in=0.0))


def test_qgle_quad_stationary_variance_matches_lyapunov():
    m = get_model("qgle-quad")
    th = np.asarray(m.true_theta)
    form = linear_form(m, th)
    P = solve_continuous_lyapunov(form.F, -form.B @ form.B.T)
    obs = simulate_observations(m, th, ObservationDesign(0.01, 200_000, 1e-4, 3))[0]
    emp = obs.states[:, 1].var()
    assert emp == pytest.approx(P[1, 1], rel=0.05)


def test_subsample_indices_and_identity():
    fine = np.arange(22.0).reshape(11, 2)
    obs = subsample(fine, ObservationDesign(5e-4, 2, 1e-4))
    np.testing.assert_array_equal(obs.states, fine[[0, 5, 10]])
    same = subsample(fine, ObservationDesign(1e-4, 10, 1e-4))
    np.testing.assert_array_equal(same.states, fine)


def test_non_integral_stride_rejected():
    with pytest.raises(ValueError, match="integer multiple"):
        ObservationDesign(2.5e-4, 10, 1e-4)


def test_long_design_geometry():
    d = ObservationDesign(0.008, 125_000, 1e-4)
    assert d.stride == 80
    assert d.n * d.stride + 1 == 10_000_001
    assert d.t_horizon == pytest.approx(1000.0)


def test_csv_round_trip_is_exact(tmp_path):
    m = get_model("fhn")
    obs = simulate_observations(m, m.true_theta, ObservationDesign(0.02, 50, 1e-3, 4))[0]
    path, side = write_observations(obs, tmp_path / "run.csv")
    assert side.exists()
    back = read_observations(path)
    assert np.array_equal(back.states, obs.states)
    assert back.design == obs.design
    assert back.model_id == "fhn"
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"t,x1,x2\n")


def _lg_moments(m, x, th, h):
    r = mean_expansion(m, make_config(m, 2), h, x, th).r
    dv = np.asarray(residual_divisors(m.mclass, h))
    return r, np.asarray(sigma0_array(m, x, th)) * np.outer(dv, dv)


def _lg_errors(h):
    m = get_model("qgle-quad")
    th = np.asarray(m.true_theta)
    x = np.array([0.6, -0.3, 0.8])
    mean, cov = _lg_moments(m, x, th, h)
    em, ec = linear_sde_exact_moments(linear_form(m, th), x, h)
    return np.abs(mean - em), np.abs(cov - ec)


def test_linear_qgle_lg_step_third_order_off_rough_block():
    (m1, c1), (m2, c2) = _lg_errors(0.01), _lg_errors(0.005)
    rm, rc = m1 / m2, c1 / c2
    assert np.all(rm[:2] >= 7)
    off = np.ones((3, 3), bool)
    off[2, 2] = False
    assert np.all(rc[off] >= 7)


def test_linear_qgle_lg_step_rough_block_is_second_order():
    # the rough mean is truncated at order one and RR = h + O(h^2)
    (m1, c1), (m2, c2) = _lg_errors(0.01), _lg_errors(0.005)
    assert 3.5 < m1[2] / m2[2] < 4.5
    assert 3.5 < c1[2, 2] / c2[2, 2] < 4.5
