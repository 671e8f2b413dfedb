"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Criteria 8-11 are Monte-Carlo experiments and take most of the runtime
(roughly an hour on one core).
"""
import time

import numpy as np
import pytest

from hypocontrast import get_model, known_models
from hypocontrast.cli import resolve_experiment, run_experiment, summarize
from hypocontrast.contrast import contrast_gradient, contrast_value, taylor_arrays
from hypocontrast.estimate import asymptotic_precision
from hypocontrast.kalman import fhn_scheme_coeffs, marginal_loglik
from hypocontrast.moments import (
    covariance_expansion,
    leading_covariance,
    make_config,
    mean_array,
    residual_divisors,
    sigma0_array,
)
from hypocontrast.oracle import (
    fd_gradient,
    joint_gaussian_loglik,
    linear_form,
    linear_sde_exact_moments,
    mc_endpoints,
    moments_from_endpoints,
)
from hypocontrast.simulate import ObservationDesign, simulate_observations

RESULTS: dict = {}


def report(num, passed, detail):
    RESULTS[num] = (bool(passed), detail)
    assert passed, detail


def _thetas(model, n, rng):
    return rng.uniform(model.layout.lo_array, model.layout.hi_array, size=(n, model.layout.size))


def _slope(hs, errs):
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


def test_criterion_01_matrix_identities():
    m = get_model("qgle-dw")
    rng = np.random.default_rng(101)
    cfg = make_config(m, 2)
    leading_covariance(m, cfg, np.zeros(3), m.true_theta)  # compile outside the timer
    t0 = time.perf_counter()
    worst = 0.0
    for th, x in zip(_thetas(m, 100, rng), rng.normal(scale=1.5, size=(100, 3))):
        c = leading_covariance(m, cfg, x, th)
        L, lam = c.lam, th[1]
        a1, a2, aR = c.blocks["a_S1"][0, 0], c.blocks["a_S2"][0, 0], c.blocks["a_R"][0, 0]
        psi = np.array([lam / 6, lam / 2, 1.0])
        errs = [
            abs(L[0, 0] + 2 * L[0, 1]),
            abs(L[1, 1] - (12 / a2 - 0.5 * L[1, 0])),
            *np.abs(L @ psi - [0.0, 0.0, 1 / aR]),
            abs(L[0, 0] - 720 / a1),
        ]
        worst = max(worst, max(errs))
    dt = time.perf_counter() - t0
    report(1, worst < 1e-10 and dt < 1.0, f"max identity error {worst:.2e}, {dt:.2f}s")


def test_criterion_02_positive_definite():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst = np.inf
    for mid in known_models():
        m = get_model(mid)
        ths = _thetas(m, 100, rng)
        xs = rng.normal(scale=1.5, size=(100, m.mclass.N))
        for th, x in zip(ths, xs):
            worst = min(worst, np.linalg.eigvalsh(np.asarray(sigma0_array(m, x, th)))[0])
    dt = time.perf_counter() - t0
    report(2, worst > 0 and dt < 1.0, f"smallest eigenvalue {worst:.3e}, {dt:.2f}s")


# states away from the slow manifold keep the smallest step in the asymptotic regime
ORDER_CASES = {
    "langevin-dw": ((2, 3, 4), [(1.0, 0.2), (-0.9, -0.4)]),
    "qgle-dw": ((2, 3), [(1.0, 0.2, -0.5), (-0.9, -0.4, 0.3)]),
    "fhn": ((2, 3, 4), [(1.0, 0.2), (-0.9, -0.4)]),
}


def test_criterion_03_ito_taylor_orders():
    hs = np.array([0.02, 0.01, 0.005])
    t0 = time.perf_counter()
    lines, ok = [], True
    for mid, (ps, states) in ORDER_CASES.items():
        m = get_model(mid)
        th = np.asarray(m.true_theta)
        for x in map(np.array, states):
            ends = [mc_endpoints(m, x, th, h, 100_000, 100, seed=3) for h in hs]
            for p in ps:
                K = p // 2
                cfg = make_config(m, p)
                me, ce = [], []
                for h, e in zip(hs, ends):
                    est = moments_from_endpoints(m, th, x, h, p, e)
                    me.append(np.abs(est.mean).max())
                    ce.append(np.abs(est.second - covariance_expansion(m, cfg, h, x, th)).max())
                sm, sc = _slope(hs, me), _slope(hs, ce)
                good = sm >= K + 0.5 - 0.15 and sc >= K + 1 - 0.2
                ok &= good
                lines.append(f"{mid} p={p} x={tuple(x)}: mean {sm:.2f}, cov {sc:.2f}")
    dt = time.perf_counter() - t0
    print("\n".join(lines))
    report(3, ok and dt < 300, f"{len(lines)} slope pairs, {'all' if ok else 'not all'} above bounds, {dt:.0f}s")


def test_criterion_04_linear_model_equivalence():
    m = get_model("qgle-quad")
    th = np.asarray(m.true_theta)
    form = linear_form(m, th)
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    ok, lines = True, []
    for x in rng.normal(size=(3, 3)):
        for p in (2, 3):
            K = p // 2
            cfg = make_config(m, p)
            mean_err, cov_err = [], []
            for h in (0.02, 0.01):
                mean, cov = linear_sde_exact_moments(form, x, h)
                mean_err.append(np.abs(np.asarray(mean_array(m, K, h, x, th)) - mean))
                dv = np.asarray(residual_divisors(m.mclass, h))
                cov_err.append(np.abs(cov / np.outer(dv, dv) - covariance_expansion(m, cfg, h, x, th)).max())
            for b in m.mclass.blocks:
                i = m.mclass.block_slice(b).start
                order = m.mclass.mean_order(b, K) + 1
                r = mean_err[0][i] / mean_err[1][i]
                ok &= r >= 0.7 * 2**order
                lines.append(f"mean {b} ratio {r:.2f} vs 2^{order}")
            r = cov_err[0] / cov_err[1]
            ok &= r >= 0.7 * 2 ** (K + 1)
            lines.append(f"cov ratio {r:.2f} vs 2^{K + 1}")
    dt = time.perf_counter() - t0
    report(4, ok and dt < 10, f"{len(lines)} ratios checked, {dt:.1f}s")


def test_criterion_05_taylor_coefficients():
    rng = np.random.default_rng(105)
    hs = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
    t0 = time.perf_counter()
    worst = np.inf
    for _ in range(20):
        N = rng.integers(2, 5)
        B = rng.normal(size=(N, N))
        S = B @ B.T + N * np.eye(N)
        corr = [(lambda C: C + C.T)(rng.normal(size=(N, N))) for _ in range(2)]
        lam = np.linalg.inv(S)
        _, ld = np.linalg.slogdet(S)
        for K in (1, 2):
            G, H = taylor_arrays(lam, ld, corr, K, np)
            ge, he = [], []
            for h in hs:
                Xi = S + sum(h ** (j + 1) * corr[j] for j in range(K))
                ge.append(np.abs(np.linalg.inv(Xi) - sum(h**k * G[k] for k in range(K + 1))).max())
                he.append(abs(np.linalg.slogdet(Xi)[1] - sum(h**k * H[k] for k in range(K + 1))))
            worst = min(worst, _slope(hs, ge) - (K + 1), _slope(hs, he) - (K + 1))
    dt = time.perf_counter() - t0
    report(5, worst >= -0.1 and dt < 5, f"worst slope margin {worst:+.3f}, {dt:.2f}s")


def test_criterion_06_gradient():
    rng = np.random.default_rng(106)
    ids = ["langevin-quad", "langevin-dw", "qgle-quad", "qgle-dw", "fhn"] * 2
    t0 = time.perf_counter()
    worst = 0.0
    for i, mid in enumerate(ids):
        m = get_model(mid)
        obs = simulate_observations(m, m.true_theta, ObservationDesign(0.01, 100, 1e-3, 600 + i))[0]
        cfg = make_config(m, m.max_p)
        th = np.asarray(m.true_theta) * rng.uniform(0.8, 1.2, size=m.layout.size)
        g = contrast_gradient(m, cfg, obs, th)
        fd = fd_gradient(lambda t: contrast_value(m, cfg, obs, t).value, th, 1e-3, order=4)
        worst = max(worst, np.max(np.abs(g - fd) / np.abs(fd)))
    dt = time.perf_counter() - t0
    report(6, worst < 1e-5 and dt < 30, f"max relative disagreement {worst:.2e}, {dt:.1f}s")


def test_criterion_07_kalman_oracle():
    m = get_model("fhn")
    rng = np.random.default_rng(107)
    obs = simulate_observations(m, m.true_theta, ObservationDesign(0.01, 200, 1e-3, 7))[0]
    t0 = time.perf_counter()
    worst = 0.0
    for i, th in enumerate(_thetas(m, 20, rng)):
        n = 1 + i % 4
        xs = obs.states[5 * i : 5 * i + n + 1, 0]
        for p in (2, 3):
            schemes = [fhn_scheme_coeffs(0.01, xs[k], th, p) for k in range(n)]
            worst = max(worst, abs(marginal_loglik(xs, th, 0.01, p) - joint_gaussian_loglik(schemes, xs)))
    dt = time.perf_counter() - t0
    report(7, worst < 1e-8 and dt < 5, f"max |KF - dense| {worst:.2e}, {dt:.2f}s")


def _mean_sd(summary, p, name):
    s = next(r for r in summary if r["p"] == p and r["parameter"] == name)
    return s["mean_error"], s["sd_error"], s["M_effective"]


def _run(cfg):
    res = resolve_experiment(cfg)
    rows = run_experiment(res)
    summary = summarize(res, rows, res.model().layout.names)
    for s in summary:
        print(s)
    return summary


@pytest.mark.slow
def test_criterion_08_qgle_sigma_bias():
    summary = _run({
        "model_id": "qgle-quad",
        "design": {"delta": 0.005, "t_horizon": 50.0},
        "p_list": [2, 3],
        "replications": 30,
        "base_seed": 800,
        "optimizer": {"name": "adam"},
    })
    b2, _, m2 = _mean_sd(summary, 2, "sigma")
    b3, _, m3 = _mean_sd(summary, 3, "sigma")
    report(8, b2 <= -0.006 and abs(b3) <= 0.006,
           f"sigma bias p=2 {b2:+.5f} (need <= -0.006), p=3 {b3:+.5f} (need |.| <= 0.006), M={m2}/{m3}")


@pytest.mark.slow
def test_criterion_09_fhn_complete():
    summary = _run({
        "model_id": "fhn",
        "design": {"delta": 0.02, "t_horizon": 250.0},
        "p_list": [2, 4],
        "replications": 20,
        "base_seed": 900,
        "optimizer": {"name": "adam", "step": 0.01},
    })
    e2, _, _ = _mean_sd(summary, 2, "eps")
    e4, _, _ = _mean_sd(summary, 4, "eps")
    s2, _, _ = _mean_sd(summary, 2, "sigma")
    s4, _, _ = _mean_sd(summary, 4, "sigma")
    report(9, e2 >= 3e-4 and abs(e4) <= 2e-4 and s2 < s4,
           f"eps bias p=2 {e2:+.2e}, p=4 {e4:+.2e}; sigma bias p=2 {s2:+.5f}, p=4 {s4:+.5f}")


@pytest.mark.slow
def test_criterion_10_fhn_partial():
    summary = _run({
        "model_id": "fhn",
        "design": {"delta": 0.005, "t_horizon": 100.0},
        "p_list": [2, 3],
        "replications": 20,
        "base_seed": 1000,
        "mode": "partial-fhn",
        "optimizer": {"name": "nelder-mead"},
        "theta0": [0.5, 0.5, 0.5, 0.5],
    })
    e2, sd2, _ = _mean_sd(summary, 2, "eps")
    e3, sd3, _ = _mean_sd(summary, 3, "eps")
    ratio = max(sd2, sd3) / min(sd2, sd3)
    report(10, e2 > e3 > 0 and ratio <= 1.25,
           f"eps bias p=2 {e2:+.2e} > p=3 {e3:+.2e} > 0; SDs {sd2:.2e} vs {sd3:.2e} (ratio {ratio:.3f})")


@pytest.mark.slow
def test_criterion_11_clt_variance():
    t0 = time.perf_counter()
    cfg = {
        "model_id": "langevin-quad",
        "design": {"delta": 0.01, "t_horizon": 100.0},
        "p_list": [3],
        "replications": 100,
        "base_seed": 1100,
        # two parameters and a value-only search keep this inside its time budget
        "optimizer": {"name": "nelder-mead", "tol": 1e-9},
    }
    res = resolve_experiment(cfg)
    summary = _run(cfg)
    _, sd, m_eff = _mean_sd(summary, 3, "sigma")
    m = res.model()
    long = simulate_observations(m, m.true_theta, res.design(1199))[0]
    pm = asymptotic_precision(m, make_config(m, 3), long, m.true_theta)
    pred = pm.standard_errors()[m.layout.index("sigma")]
    dt = time.perf_counter() - t0
    rel = abs(sd / pred - 1)
    report(11, rel <= 0.30 and dt < 1200,
           f"SD of sigma_hat {sd:.5f} vs predicted {pred:.5f} ({rel:.1%} off), M={m_eff}, {dt:.0f}s")
