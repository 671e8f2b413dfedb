"""Contrast functions for both model classes, and their theta-gradient.

The per-step terms are evaluated in one vectorised pass over all transitions.
The gradient is forward-mode AD (jax.jacfwd, one tangent per coordinate of
theta) through mean expansions, covariance blocks, inversion, log-det and the
G/H recursion.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from ._linalg import (
    compensated_sum,
    matmul_c,
    quad_c,
    sym_inv_logdet_c,
    to_components,
    trace_c,
)
from ._xp import namespace
from .model import HypoModel, ModelError, UnsupportedOrderError, theta_array
from .moments import (
    ContrastConfig,
    CovExpansion,
    NotPositiveDefinite,
    corrections_array,
    residual_array,
    sigma0_array,
)
from .simulate import ObservationSet

SENTINEL = 1e300


@dataclass
class TaylorCoeffs:
    G: list
    H: list


@dataclass
class ContrastValue:
    value: float
    per_step_terms: np.ndarray | None = None


def taylor_arrays(lam, logdet, corrections, K: int, xp=None):
    """G_0..G_K and H_0..H_K for batched Lambda, log det and Sigma_1..Sigma_K."""
    xp = xp or namespace(lam)
    if K > len(corrections):
        raise UnsupportedOrderError(f"need Sigma_1..Sigma_{K}, have {len(corrections)} corrections")
    G = [lam]
    H = [logdet]
    for k in range(1, K + 1):
        acc = 0
        h = 0
        for m in range(1, k + 1):
            acc = acc + G[k - m] @ corrections[m - 1]
            h = h + m * xp.trace(corrections[m - 1] @ G[k - m], axis1=-2, axis2=-1)
        G.append(-(acc @ lam))
        H.append(h / k)
    return G, H


def taylor_coeffs(cov: CovExpansion, K: int) -> TaylorCoeffs:
    lam = np.asarray(cov.lam)
    _, logdet = np.linalg.slogdet(cov.sigma0)
    G, H = taylor_arrays(lam, logdet, [np.asarray(c) for c in cov.corrections], K, np)
    return TaylorCoeffs(G, [float(h) if np.ndim(h) == 0 else h for h in H])


def taylor_components(lam, logdet, corrections, K: int):
    """taylor_arrays in component form (nested lists of arrays)."""
    if K > len(corrections):
        raise UnsupportedOrderError(f"need Sigma_1..Sigma_{K}, have {len(corrections)} corrections")
    N = len(lam)
    G = [lam]
    H = [logdet]
    for k in range(1, K + 1):
        acc = [[0.0] * N for _ in range(N)]
        h = 0.0
        for m in range(1, k + 1):
            P = matmul_c(G[k - m], corrections[m - 1])
            acc = [[acc[i][j] + P[i][j] for j in range(N)] for i in range(N)]
            h = h + m * trace_c(P)
        G.append([[-v for v in row] for row in matmul_c(acc, lam)])
        H.append(h / k)
    return G, H


def step_terms(model: HypoModel, p: int, delta, X, th, xp=None):
    """Per-transition contrast terms and PD mask for states X of shape (n+1, N)."""
    xp = xp or namespace(X, th)
    K = p // 2
    x0, x1 = X[:-1], X[1:]
    mr = residual_array(model, K, delta, x0, x1, th)
    m = [mr[..., i] for i in range(mr.shape[-1])]
    lam, logdet, ok = sym_inv_logdet_c(to_components(sigma0_array(model, x0, th)), xp)
    if p == 2:
        return quad_c(m, lam) + logdet, ok
    corr = [to_components(c) for c in corrections_array(model, K, x0, th)]
    G, H = taylor_components(lam, logdet, corr, K)
    terms = 0.0
    for j in range(K + 1):
        terms = terms + delta**j * (quad_c(m, G[j]) + H[j])
    return terms, ok


def _unpack(obs):
    if isinstance(obs, ObservationSet):
        return obs.states, obs.delta
    states, delta = obs
    return np.asarray(states, dtype=float), float(delta)


def _check(model, cfg, states, th):
    model.check_p(cfg.p)
    if states.ndim != 2 or states.shape[1] != model.mclass.N:
        raise ModelError(f"observations have shape {states.shape}, model {model.id} needs (n+1, {model.mclass.N})")
    if np.shape(th) != (model.layout.size,):
        raise ModelError(f"theta must have {model.layout.size} entries, got shape {np.shape(th)}")


def contrast_value(model: HypoModel, cfg: ContrastConfig, obs, theta, jobs: int = 1,
                   keep_terms: bool = False) -> ContrastValue:
    """l_{p,n}(theta).  ``obs`` is an ObservationSet or a (states, delta) pair.

    With jobs > 1 the transitions are split into contiguous chunks evaluated
    on threads; partial sums combine with the same compensated summation.
    """
    states, delta = _unpack(obs)
    th = np.asarray(theta_array(theta), dtype=float)
    _check(model, cfg, states, th)
    n = states.shape[0] - 1
    bounds = np.linspace(0, n, max(1, min(jobs, n)) + 1).astype(int)

    def chunk(i):
        a, b = bounds[i], bounds[i + 1]
        return step_terms(model, cfg.p, delta, states[a : b + 1], th, np)

    if len(bounds) > 2:
        with ThreadPoolExecutor(len(bounds) - 1) as ex:
            parts = list(ex.map(chunk, range(len(bounds) - 1)))
    else:
        parts = [chunk(0)]
    terms = np.concatenate([t for t, _ in parts])
    ok = np.concatenate([o for _, o in parts])
    if not ok.all():
        i = int(np.argmin(ok))
        ev = float(np.linalg.eigvalsh(np.asarray(sigma0_array(model, states[i], th)))[0])
        raise NotPositiveDefinite(
            f"leading covariance not positive definite at step {i + 1} (x_{i}={states[i].tolist()}, "
            f"smallest eigenvalue {ev:.3e})",
            min_eigenvalue=ev,
            step=i + 1,
        )
    value = float(compensated_sum(terms, np))
    return ContrastValue(value, terms if keep_terms else None)


_OBJECTIVES: dict = {}


def _compiled(model: HypoModel, p: int):
    key = (type(model), model.id, model.consts, p)
    if key not in _OBJECTIVES:

        def value(th, X, delta):
            terms, ok = step_terms(model, p, delta, X, th, jnp)
            v = compensated_sum(terms, jnp)
            good = jnp.all(ok) & jnp.isfinite(v)
            return jnp.where(good, v, SENTINEL), (jnp.where(good, v, SENTINEL), good)

        jac = jax.jacfwd(value, has_aux=True)

        def both(th, X, delta):
            g, (v, good) = jac(th, X, delta)
            return v, jnp.where(good, g, 0.0), good

        _OBJECTIVES[key] = (jax.jit(lambda th, X, d: value(th, X, d)[1]), jax.jit(both))
    return _OBJECTIVES[key]


class ContrastObjective:
    """Jitted value and value+gradient of l_{p,n} for one dataset.

    Calls return plain numpy/float results.  Outside the PD region the value
    is a large sentinel and ``ok`` is False, so optimisers can retreat.
    """

    def __init__(self, model: HypoModel, cfg: ContrastConfig, obs):
        states, delta = _unpack(obs)
        model.check_p(cfg.p)
        _check(model, cfg, states, np.asarray(model.layout.midpoint()))
        self.model = model
        self.cfg = cfg
        self.X = jnp.asarray(states)
        self.delta = float(delta)
        self._value, self._both = _compiled(model, cfg.p)

    def value(self, theta) -> tuple[float, bool]:
        v, ok = self._value(jnp.asarray(theta, dtype=jnp.float64), self.X, self.delta)
        return float(v), bool(ok)

    def __call__(self, theta) -> tuple[float, np.ndarray, bool]:
        v, g, ok = self._both(jnp.asarray(theta, dtype=jnp.float64), self.X, self.delta)
        return float(v), np.asarray(g), bool(ok)


def contrast_gradient(model: HypoModel, cfg: ContrastConfig, obs, theta) -> np.ndarray:
    th = np.asarray(theta_array(theta), dtype=float)
    states, delta = _unpack(obs)
    _check(model, cfg, states, th)
    v, g, ok = ContrastObjective(model, cfg, (states, delta))(th)
    if not ok:
        # re-run the numpy path for a diagnostic naming the step
        contrast_value(model, cfg, (states, delta), th)
        raise NotPositiveDefinite("contrast not finite at theta", step=None)
    return g


__all__ = [
    "ContrastObjective",
    "ContrastValue",
    "SENTINEL",
    "TaylorCoeffs",
    "contrast_gradient",
    "contrast_value",
    "step_terms",
    "taylor_arrays",
    "taylor_coeffs",
]
