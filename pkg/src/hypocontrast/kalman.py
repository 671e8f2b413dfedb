"""Partial observation of the FitzHugh-Nagumo model: only x is seen.

Given X_k the one-step Gaussian scheme is linear in the hidden Y_k, so a
scalar Kalman filter yields the marginal likelihood of X_{1:n}.  The
theta-independent density of X_0 is dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .model import theta_array

S_DEFAULT = 0.01
PRIOR_DEFAULT = (0.0, 1.0)


class FilterError(RuntimeError):
    pass


@numba.njit(cache=True)
def _scheme(delta, x, eps, gam, alp, sig, s, p):
    d = delta
    drift_x = x - x**3 - s
    a0 = x + d / eps * drift_x + d * d / (2 * eps * eps) * (1 - 3 * x * x) * drift_x - d * d / (2 * eps) * (gam * x + alp)
    a1 = (gam * x + alp) * d
    b0 = -d / eps + (-(1 - 3 * x * x) + eps) * d * d / (2 * eps * eps)
    b1 = 1 - d
    sxx = d**3 / 3 * sig * sig / (eps * eps)
    sxy = -d * d / 2 * sig * sig / eps
    syy = d * sig * sig
    if p == 3:
        L1 = -sig / eps
        L2 = sig / (eps * eps) * (-(1 - 3 * x * x) + eps)
        L3 = -sig
        sxx += d**4 / 4 * L1 * L2
        sxy += d**3 * (sig * L2 / 6 + L1 * L3 / 3)
        syy += d * d * sig * L3
    return a0, a1, b0, b1, sxx, sxy, syy


@numba.njit(cache=True)
def _update(m, Q, x_prev, x_new, delta, eps, gam, alp, sig, s, p):
    a0, a1, b0, b1, sxx, sxy, syy = _scheme(delta, x_prev, eps, gam, alp, sig, s, p)
    mux = a0 + b0 * m
    muy = a1 + b1 * m
    lxx = sxx + b0 * b0 * Q
    lxy = sxy + b0 * b1 * Q
    lyy = syy + b1 * b1 * Q
    if not lxx > 0.0:
        return m, Q, 0.0, mux, muy, lxx, lxy, lyy, False
    innov = x_new - mux
    ll = -0.5 * (math.log(2 * math.pi * lxx) + innov * innov / lxx)
    m_new = muy + lxy / lxx * innov
    Q_new = lyy - lxy * lxy / lxx
    return m_new, Q_new, ll, mux, muy, lxx, lxy, lyy, True


@numba.njit(cache=True)
def _filter(xs, delta, eps, gam, alp, sig, s, p, m0, Q0):
    m = m0
    Q = Q0
    total = 0.0
    for k in range(1, xs.shape[0]):
        m, Q, ll, _, _, lxx, _, _, ok = _update(m, Q, xs[k - 1], xs[k], delta, eps, gam, alp, sig, s, p)
        if not ok:
            return total, k, 1
        # Q may dip below zero only by rounding; anything larger is a real failure
        if Q < -1e-12 * (1.0 + abs(lxx)):
            return total, k, 2
        total += ll
    return total, 0, 0


@dataclass
class FhnGaussianScheme:
    a: np.ndarray
    b: np.ndarray
    Sigma_p: np.ndarray
    L1: float
    L2: float
    L3: float


@dataclass
class FilterState:
    m: float
    Q: float
    loglik_partial: float = 0.0


def _check_p(p):
    if p not in (2, 3):
        raise ValueError(f"Kalman scheme is defined for p in (2, 3), got {p}")


def fhn_scheme_coeffs(delta: float, x: float, theta, p: int, s: float = S_DEFAULT) -> FhnGaussianScheme:
    _check_p(p)
    eps, gam, alp, sig = (float(v) for v in np.asarray(theta_array(theta), dtype=float))
    a0, a1, b0, b1, sxx, sxy, syy = _scheme(float(delta), float(x), eps, gam, alp, sig, float(s), p)
    L1 = -sig / eps
    L2 = sig / eps**2 * (-(1 - 3 * x * x) + eps)
    return FhnGaussianScheme(
        np.array([a0, a1]), np.array([b0, b1]), np.array([[sxx, sxy], [sxy, syy]]), L1, L2, -sig
    )


def kf_update(state: FilterState, x_prev: float, x_new: float, delta: float, theta, p: int,
              s: float = S_DEFAULT) -> FilterState:
    _check_p(p)
    eps, gam, alp, sig = (float(v) for v in np.asarray(theta_array(theta), dtype=float))
    m, Q, ll, *_, lxx, _, _, ok = _update(state.m, state.Q, float(x_prev), float(x_new), float(delta),
                                          eps, gam, alp, sig, float(s), p)
    if not ok:
        raise FilterError(f"predictive variance of X is not positive ({lxx:.3e})")
    return FilterState(m, Q, state.loglik_partial + ll)


def marginal_loglik(obs_x, theta, delta: float, p: int, prior=PRIOR_DEFAULT, s: float = S_DEFAULT,
                    raise_on_error: bool = True) -> float:
    """log f_{p,n}(X_{0:n}; theta) without the X_0 factor.

    With ``raise_on_error=False`` a failed filter returns -inf instead.
    """
    _check_p(p)
    xs = np.ascontiguousarray(obs_x, dtype=float)
    eps, gam, alp, sig = (float(v) for v in np.asarray(theta_array(theta), dtype=float))
    total, k, status = _filter(xs, float(delta), eps, gam, alp, sig, float(s), p, float(prior[0]), float(prior[1]))
    if status:
        if not raise_on_error:
            return -math.inf
        what = "predictive variance of X not positive" if status == 1 else "filter variance Q negative"
        raise FilterError(f"{what} at step {k}, theta={[eps, gam, alp, sig]}")
    return total


__all__ = [
    "FhnGaussianScheme",
    "FilterError",
    "FilterState",
    "fhn_scheme_coeffs",
    "kf_update",
    "marginal_loglik",
]
