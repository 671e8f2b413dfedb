"""Adam and Nelder-Mead optimisers over the box, and the asymptotic precision matrix."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from .model import HypoClass, HypoModel, ModelError, theta_array
from .moments import ContrastConfig, sigma0_array, sigma0_blocks
from .simulate import ObservationSet

PENALTY = 1e12


class BadStartError(ModelError):
    pass


@dataclass(frozen=True)
class AdamConfig:
    step: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iters: int = 8000

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("Adam step must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam decay rates must lie in [0, 1)")
        if self.iters < 1:
            raise ValueError("Adam needs at least one iteration")


@dataclass
class EstimationResult:
    theta_hat: np.ndarray
    value: float
    converged: bool
    runtime: float
    n_evals: int
    trace: list = field(default_factory=list)
    message: str = ""


def _box(box, n):
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.shape != (n,) or hi.shape != (n,):
        raise ValueError(f"box bounds must have shape ({n},)")
    return lo, hi


def adam_minimize(objective: Callable, theta0, cfg: AdamConfig = AdamConfig(), box=None,
                  keep_trace: bool = False, max_backtracks: int = 30) -> EstimationResult:
    """Minimise ``objective(theta) -> (value, grad, ok)`` with bias-corrected Adam.

    Iterates are clipped to the box after every update.  If the objective
    reports failure at a proposed point the step is halved towards the
    current iterate until it succeeds.
    """
    t0 = time.perf_counter()
    theta = np.array(theta0, dtype=float)
    if box is None:
        lo = np.full(theta.shape, -np.inf)
        hi = np.full(theta.shape, np.inf)
    else:
        lo, hi = _box(box, theta.size)
    if np.any(theta < lo) or np.any(theta > hi):
        raise BadStartError(f"starting point {theta.tolist()} lies outside the box")
    value, grad, ok = objective(theta)
    evals = 1
    if not ok:
        raise BadStartError(f"objective not finite at the starting point {theta.tolist()}")
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    trace = [(value, theta.copy())] if keep_trace else []
    b1, b2 = cfg.beta1, cfg.beta2
    for t in range(1, cfg.iters + 1):
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        proposal = np.clip(theta - cfg.step * mhat / (np.sqrt(vhat) + cfg.eps), lo, hi)
        for _ in range(max_backtracks + 1):
            pv, pg, pok = objective(proposal)
            evals += 1
            if pok:
                break
            proposal = theta + 0.5 * (proposal - theta)
        else:
            pv, pg, pok = value, grad, True
            proposal = theta
        theta, value, grad = proposal, pv, pg
        if keep_trace:
            trace.append((value, theta.copy()))
    converged = bool(np.max(np.abs(grad)) < 1e-4 * (1 + abs(value))) if grad.size else True
    return EstimationResult(theta, float(value), converged, time.perf_counter() - t0, evals, trace)


def nelder_mead_maximize(objective: Callable, theta0, box, tol: float = 1e-8, max_evals: int = 4000,
                         edge: float = 0.05, keep_trace: bool = False) -> EstimationResult:
    """Maximise a value-only objective with the standard simplex method.

    Points outside the box score -1e12.  Coefficients: reflection 1,
    expansion 2, contraction 0.5, shrink 0.5.  Convergence means the simplex
    diameter fell below ``tol``.
    """
    t0 = time.perf_counter()
    x0 = np.array(theta0, dtype=float)
    n = x0.size
    lo, hi = _box(box, n)
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise BadStartError(f"starting point {x0.tolist()} lies outside the box")
    evals = 0

    def f(x):
        # minimise the negated objective
        nonlocal evals
        evals += 1
        if np.any(x < lo) or np.any(x > hi):
            return PENALTY
        val = objective(x)
        return -val if np.isfinite(val) else PENALTY

    simplex = [x0]
    for k in range(n):
        step = edge * (hi[k] - lo[k])
        x = x0.copy()
        x[k] = x0[k] + step if x0[k] + step <= hi[k] else x0[k] - step
        simplex.append(x)
    simplex = np.array(simplex)
    fs = np.array([f(x) for x in simplex])
    trace = []
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        simplex, fs = simplex[order], fs[order]
        if keep_trace:
            trace.append((-fs[0], simplex[0].copy()))
        diam = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)) if n else 0.0
        if diam < tol:
            converged = True
            break
        if evals >= max_evals:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fs[0] <= fr < fs[-2]:
            simplex[-1], fs[-1] = xr, fr
            continue
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fs[-1] = xe, fe
            else:
                simplex[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < fs[-1]:
                simplex[-1], fs[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
            fs[i] = f(simplex[i])
    best = np.clip(simplex[0], lo, hi)
    msg = "" if converged else f"max_evals={max_evals} exhausted"
    return EstimationResult(best, float(-fs[0]), converged, time.perf_counter() - t0, evals, trace, msg)


@dataclass
class PrecisionMatrix:
    gamma: np.ndarray
    rate_matrix: np.ndarray
    blocks: dict

    def standard_errors(self) -> np.ndarray:
        """Asymptotic SDs of the estimator: sqrt(diag(Gamma^{-1})) / rate."""
        cov = np.zeros_like(self.gamma)
        for idx in self.blocks.values():
            if idx:
                sub = self.gamma[np.ix_(idx, idx)]
                cov[np.ix_(idx, idx)] = np.linalg.inv(sub)
        return np.sqrt(np.diag(cov)) / self.rate_matrix


_RATES = {
    HypoClass.HYPO_I: {"S": lambda n, d: np.sqrt(n / d), "R": lambda n, d: np.sqrt(n * d), "sigma": lambda n, d: np.sqrt(n)},
    HypoClass.HYPO_II: {
        "S1": lambda n, d: np.sqrt(n / d**3),
        "S2": lambda n, d: np.sqrt(n / d),
        "R": lambda n, d: np.sqrt(n * d),
        "sigma": lambda n, d: np.sqrt(n),
    },
}
_COEF = {HypoClass.HYPO_I: {"S": 12.0, "R": 1.0}, HypoClass.HYPO_II: {"S1": 720.0, "S2": 12.0, "R": 1.0}}


def asymptotic_precision(model: HypoModel, cfg: ContrastConfig, sample, theta, n: int | None = None,
                         delta: float | None = None) -> PrecisionMatrix:
    """Gamma(theta) with each integral against the invariant law replaced by a sample average.

    ``sample`` is an ObservationSet (its design gives n and delta unless
    overridden) or an array of states.
    """
    if isinstance(sample, ObservationSet):
        X = sample.states
        n = sample.design.n if n is None else n
        delta = sample.delta if delta is None else delta
    else:
        X = np.asarray(sample, dtype=float)
        n = X.shape[0] - 1 if n is None else n
        if delta is None:
            raise ValueError("delta required when sample is a bare array")
    th = jnp.asarray(np.asarray(theta_array(theta), dtype=float))
    Xj = jnp.asarray(X)
    mc = model.mclass
    lay = model.layout
    P = lay.size
    gamma = np.zeros((P, P))
    blocks = {}
    dmu = np.asarray(jax.jacfwd(lambda t: model.drift(Xj, t))(th))  # (n, N, P)
    a_blocks = {k: np.asarray(v) for k, v in sigma0_blocks(model, Xj, th).items()}
    for b in (("S", "R") if mc.tag is HypoClass.HYPO_I else ("S1", "S2", "R")):
        idx = lay.block_indices(b)
        blocks[b] = idx
        if not idx:
            continue
        sl = mc.block_slice(b)
        a = a_blocks["a_" + b]
        bad = np.linalg.eigvalsh(a)[..., 0] <= 0
        if bad.any():
            i = int(np.argmax(bad))
            raise ModelError(f"singular a_{b} at state {X[i].tolist()}")
        J = dmu[:, sl, :][:, :, idx]
        ainvJ = np.linalg.solve(a, J)
        gamma[np.ix_(idx, idx)] = _COEF[mc.tag][b] * np.mean(np.einsum("nki,nkj->nij", J, ainvJ), axis=0)
    sidx = lay.block_indices("sigma")
    blocks["sigma"] = sidx
    if sidx:
        S = np.asarray(sigma0_array(model, Xj, th))
        dS = np.asarray(jax.jacfwd(lambda t: sigma0_array(model, Xj, t))(th))[..., sidx]
        lam = np.linalg.inv(S)
        Mk = np.einsum("nabk,nbc->nack", dS, lam)  # (dSigma_k) Lambda
        gamma[np.ix_(sidx, sidx)] = 0.5 * np.mean(np.einsum("nabi,nbaj->nij", Mk, Mk), axis=0)
    rates = np.zeros(P)
    for b, idx in blocks.items():
        for i in idx:
            rates[i] = _RATES[mc.tag][b](n, delta)
    return PrecisionMatrix(gamma, rates, blocks)


__all__ = [
    "AdamConfig",
    "BadStartError",
    "EstimationResult",
    "PrecisionMatrix",
    "adam_minimize",
    "asymptotic_precision",
    "nelder_mead_maximize",
]
