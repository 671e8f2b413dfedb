"""Conditional mean expansions, standardised residuals and covariance expansions.

Every array-valued function here takes a batch of states ``(..., N)`` and
works on numpy or jax arrays; the dataclass-returning wrappers are the
numpy-facing public surface.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from ._linalg import sym_inv_logdet
from ._xp import namespace
from .model import HypoClass, HypoModel, ModelClass, ModelError, theta_array


@dataclass(frozen=True)
class ContrastConfig:
    p: int
    tag: HypoClass

    @property
    def K(self) -> int:
        return self.p // 2


def make_config(model: HypoModel, p: int) -> ContrastConfig:
    model.check_p(p)
    return ContrastConfig(p, model.mclass.tag)


@dataclass
class MeanExpansion:
    r_blocks: dict[str, np.ndarray]
    r: np.ndarray


@dataclass
class StandardizedResidual:
    m: np.ndarray
    scalings: dict[str, float]


@dataclass
class CovExpansion:
    sigma0: np.ndarray
    blocks: dict[str, np.ndarray]
    lam: np.ndarray
    corrections: list[np.ndarray] = field(default_factory=list)

    @property
    def logdet(self) -> float:
        return float(np.linalg.slogdet(self.sigma0)[1])


def residual_divisors(mclass: ModelClass, delta, xp=np):
    """Per-component divisor Delta^{s_a/2}."""
    return xp.asarray(delta, dtype=xp.float64) ** (xp.asarray(mclass.component_powers(), dtype=xp.float64) / 2)


def mean_array(model: HypoModel, K: int, delta, x, th):
    """Truncated Ito-Taylor mean, blocks at orders K+2/K+1/K (class II) or K+1/K (class I)."""
    xp = namespace(x, th, delta)
    parts = []
    for block in model.mclass.blocks:
        sl = model.mclass.block_slice(block)
        r = x[..., sl]
        for k in range(1, model.mclass.mean_order(block, K) + 1):
            r = r + delta**k / factorial(k) * model.gen_mu(k, block, x, th)
        parts.append(r)
    return xp.concatenate(parts, axis=-1)


def residual_array(model: HypoModel, K: int, delta, x_prev, x_next, th):
    xp = namespace(x_prev, x_next, th, delta)
    r = mean_array(model, K, delta, x_prev, th)
    return (x_next - r) / residual_divisors(model.mclass, delta, xp)


def _outer_sum(us, vs, xp):
    return sum(xp.einsum("...i,...j->...ij", u, v) for u, v in zip(us, vs))


def sigma0_blocks(model: HypoModel, x, th) -> dict[str, object]:
    """Named blocks of the leading covariance, from directional terms and A_R."""
    xp = namespace(x, th)
    mc = model.mclass
    A = model.diffusion(x, th)
    rough = [A[..., mc.block_slice("R"), k] for k in range(mc.d)]
    out = {"a_R": _outer_sum(rough, rough, xp)}
    out["RR"] = out["a_R"]
    if mc.tag is HypoClass.HYPO_I:
        v = [model.dir_mu(k, "S", x, th) for k in range(mc.d)]
        out["a_S"] = _outer_sum(v, v, xp)
        out["SS"] = out["a_S"] / 3.0
        out["SR"] = _outer_sum(v, rough, xp) / 2.0
    else:
        u = [model.dir_mu(k, "S1", x, th) for k in range(mc.d)]
        w = [model.dir_mu(k, "S2", x, th) for k in range(mc.d)]
        out["a_S1"] = _outer_sum(u, u, xp)
        out["a_S2"] = _outer_sum(w, w, xp)
        out["S1S1"] = out["a_S1"] / 20.0
        out["S1S2"] = _outer_sum(u, w, xp) / 8.0
        out["S1R"] = _outer_sum(u, rough, xp) / 6.0
        out["S2S2"] = out["a_S2"] / 3.0
        out["S2R"] = _outer_sum(w, rough, xp) / 2.0
    return out


def _swap(M, xp):
    return xp.swapaxes(M, -1, -2)


def sigma0_array(model: HypoModel, x, th):
    xp = namespace(x, th)
    b = sigma0_blocks(model, x, th)
    if model.mclass.tag is HypoClass.HYPO_I:
        rows = [[b["SS"], b["SR"]], [_swap(b["SR"], xp), b["RR"]]]
    else:
        rows = [
            [b["S1S1"], b["S1S2"], b["S1R"]],
            [_swap(b["S1S2"], xp), b["S2S2"], b["S2R"]],
            [_swap(b["S1R"], xp), _swap(b["S2R"], xp), b["RR"]],
        ]
    return xp.concatenate([xp.concatenate(r, axis=-1) for r in rows], axis=-2)


def corrections_array(model: HypoModel, K: int, x, th) -> list:
    return [model.cov_correction(j, x, th) for j in range(1, K + 1)]


def xi_array(model: HypoModel, K: int, h, x, th):
    S = sigma0_array(model, x, th)
    for j, Sj in enumerate(corrections_array(model, K, x, th), start=1):
        S = S + h**j * Sj
    return S


# public numpy surface --------------------------------------------------------


def _np_inputs(model, x, theta):
    x = np.asarray(x, dtype=float)
    th = np.asarray(theta_array(theta), dtype=float)
    if x.shape[-1] != model.mclass.N:
        raise ModelError(f"state has {x.shape[-1]} entries, model {model.id} has N={model.mclass.N}")
    return x, th


def mean_expansion(model: HypoModel, cfg: ContrastConfig, delta: float, x, theta) -> MeanExpansion:
    x, th = _np_inputs(model, x, theta)
    r = mean_array(model, cfg.K, float(delta), x, th)
    blocks = {b: r[..., model.mclass.block_slice(b)] for b in model.mclass.blocks}
    return MeanExpansion(blocks, r)


def standardized_residual(model: HypoModel, cfg: ContrastConfig, delta: float, x_prev, x_next, theta):
    if not delta > 0:
        raise ModelError(f"step must be positive, got {delta}")
    x_prev, th = _np_inputs(model, x_prev, theta)
    x_next = np.asarray(x_next, dtype=float)
    m = residual_array(model, cfg.K, float(delta), x_prev, x_next, th)
    scal = {b: float(delta) ** (model.mclass.var_power(b) / 2) for b in model.mclass.blocks}
    return StandardizedResidual(m, scal)


class NotPositiveDefinite(ModelError):
    def __init__(self, msg, min_eigenvalue=None, step=None):
        super().__init__(msg)
        self.min_eigenvalue = min_eigenvalue
        self.step = step


def _check_pd(S, x, th):
    S2 = S.reshape(-1, S.shape[-2], S.shape[-1])
    ev = np.linalg.eigvalsh(S2)
    tr = np.trace(S2, axis1=-2, axis2=-1)
    bad = ~(ev[:, 0] > 1e-12 * np.abs(tr))
    if np.any(bad):
        i = int(np.argmax(bad))
        xs = np.asarray(x).reshape(-1, S.shape[-1])
        xi = xs[i] if xs.shape[0] == S2.shape[0] else xs[0]
        raise NotPositiveDefinite(
            f"leading covariance not positive definite (smallest eigenvalue {ev[i, 0]:.3e}) "
            f"at x={xi.tolist()}, theta={np.asarray(th).tolist()}",
            min_eigenvalue=float(ev[i, 0]),
        )
    return ev


def _eig_inverse(S):
    w, V = np.linalg.eigh(S)
    return np.einsum("...ik,...k,...jk->...ij", V, 1.0 / w, V)


# Sigma = T (C kron I_d) T^T with T = blockdiag of the per-block noise loadings
_C_INV = {
    HypoClass.HYPO_I: np.array([[12.0, -6.0], [-6.0, 4.0]]),
    HypoClass.HYPO_II: np.array([[720.0, -360.0, 60.0], [-360.0, 192.0, -36.0], [60.0, -36.0, 9.0]]),
}


def _factored_inverse(model: HypoModel, x, th):
    """Lambda from the loading factorisation when every block is d-dimensional.

    Avoids inverting the badly scaled Sigma itself; returns None when the
    loadings are not square or are singular.
    """
    mc = model.mclass
    d = mc.d
    if any(mc.block_size(b) != d for b in mc.blocks) or np.ndim(x) != 1:
        return None
    A = np.asarray(model.diffusion(x, th))[mc.block_slice("R")]
    T = [np.column_stack([np.asarray(model.dir_mu(k, b, x, th)) for k in range(d)]) for b in mc.smooth_blocks()]
    T.append(A)
    try:
        Tinv = [np.linalg.inv(t) for t in T]
    except np.linalg.LinAlgError:
        return None
    Ci = _C_INV[mc.tag]
    nb = len(T)
    return np.block([[Ci[a, b] * Tinv[a].T @ Tinv[b] for b in range(nb)] for a in range(nb)])


def leading_covariance(model: HypoModel, cfg: ContrastConfig, x, theta) -> CovExpansion:
    x, th = _np_inputs(model, x, theta)
    S = sigma0_array(model, x, th)
    _check_pd(S, x, th)
    blocks = {k: np.asarray(v) for k, v in sigma0_blocks(model, x, th).items()}
    lam = _factored_inverse(model, x, th)
    return CovExpansion(S, blocks, _eig_inverse(S) if lam is None else lam)


def full_expansion(model: HypoModel, cfg: ContrastConfig, x, theta) -> CovExpansion:
    """Leading covariance plus the K_p corrections."""
    cov = leading_covariance(model, cfg, x, theta)
    x, th = _np_inputs(model, x, theta)
    cov.corrections = [np.asarray(c) for c in corrections_array(model, cfg.K, x, th)]
    return cov


def covariance_expansion(model: HypoModel, cfg: ContrastConfig, h: float, x, theta) -> np.ndarray:
    """Xi_K(h) = Sigma + sum_j h^j Sigma_j."""
    x, th = _np_inputs(model, x, theta)
    S = xi_array(model, cfg.K, float(h), x, th)
    _check_pd(sigma0_array(model, x, th), x, th)
    return S


def inverse_logdet(S):
    """Closed-form inverse / log-det with a PD mask; thin re-export for callers."""
    return sym_inv_logdet(S)


__all__ = [
    "ContrastConfig",
    "CovExpansion",
    "MeanExpansion",
    "NotPositiveDefinite",
    "StandardizedResidual",
    "covariance_expansion",
    "full_expansion",
    "leading_covariance",
    "make_config",
    "mean_expansion",
    "standardized_residual",
]
