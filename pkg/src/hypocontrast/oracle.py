"""Independent verification engines.

Nothing here calls the generator iterates, covariance blocks or corrections
of a model: only its raw drift mu and diffusion A are used, so these routines
can certify the closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Callable, Sequence

import jax
import jax.numpy as jnp
import numpy as np
from scipy.linalg import expm

from .model import HypoModel, ModelError, theta_array
from .moments import mean_array, residual_divisors


# exact moments of linear SDEs ----------------------------------------------------


@dataclass
class LinearSdeForm:
    F: np.ndarray
    c: np.ndarray
    B: np.ndarray


def linear_form(model: HypoModel, theta, n_check: int = 10, seed: int = 0, tol: float = 1e-10) -> LinearSdeForm:
    """Read off F, c, B from the raw fields and assert the model really is affine."""
    th = np.asarray(theta_array(theta), dtype=float)
    N = model.mclass.N
    c = np.asarray(model.drift(np.zeros(N), th), dtype=float)
    F = np.column_stack([np.asarray(model.drift(e, th), dtype=float) - c for e in np.eye(N)])
    B = np.asarray(model.diffusion(np.zeros(N), th), dtype=float)
    rng = np.random.default_rng(seed)
    for x in rng.normal(scale=2.0, size=(n_check, N)):
        mu = np.asarray(model.drift(x, th), dtype=float)
        A = np.asarray(model.diffusion(x, th), dtype=float)
        scale = 1.0 + np.abs(mu).max()
        if np.abs(mu - (F @ x + c)).max() > tol * scale or np.abs(A - B).max() > tol * (1 + np.abs(B).max()):
            raise ModelError(f"model {model.id} is not linear with constant diffusion (checked at x={x.tolist()})")
    return LinearSdeForm(F, c, B)


def linear_sde_exact_moments(form: LinearSdeForm, x, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact conditional mean and covariance over one step, via augmented exponentials."""
    F = np.asarray(form.F, dtype=float)
    c = np.asarray(form.c, dtype=float).ravel()
    B = np.asarray(form.B, dtype=float).reshape(F.shape[0], -1)
    N = F.shape[0]
    aug = np.zeros((N + 1, N + 1))
    aug[:N, :N] = F
    aug[:N, N] = c
    E = expm(aug * delta)
    mean = E[:N, :N] @ np.asarray(x, dtype=float) + E[:N, N]
    # Van Loan: exp([[-F, BB^T], [0, F^T]] h) = [[., G12], [0, G22]], cov = G22^T G12
    vl = np.zeros((2 * N, 2 * N))
    vl[:N, :N] = -F
    vl[:N, N:] = B @ B.T
    vl[N:, N:] = F.T
    G = expm(vl * delta)
    cov = G[N:, N:].T @ G[:N, N:]
    return mean, 0.5 * (cov + cov.T)


# finite differences ----------------------------------------------------------------


def fd_gradient(objective: Callable, theta, rel_step: float = 1e-6, order: int = 2) -> np.ndarray:
    """Central differences with step rel_step * (1 + |theta_k|).

    ``order=4`` uses the five-point stencil, which tolerates a larger step and
    so less cancellation when the objective is large next to its gradient.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    th = np.asarray(theta, dtype=float)
    g = np.empty_like(th)
    for k in range(th.size):
        h = rel_step * (1.0 + abs(th[k]))
        e = np.zeros_like(th)
        e[k] = h
        fp, fm = objective(th + e), objective(th - e)
        vals = [fp, fm]
        if order == 4:
            fpp, fmm = objective(th + 2 * e), objective(th - 2 * e)
            vals += [fpp, fmm]
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"objective not finite around coordinate {k}")
        if order == 2:
            g[k] = (fp - fm) / (2 * h)
        else:
            g[k] = (8 * (fp - fm) - (fpp - fmm)) / (12 * h)
    return g


def fd_operator_apply(mu: Callable, A: Callable, which, phi: Callable, x, h_fd: float = 1e-4) -> np.ndarray:
    """Apply L (which='L') or L_j (which=('L', j)) to phi at x by central differences.

    mu(x) -> (N,), A(x) -> (N, d), phi(x) -> (M,).  Second derivatives use
    the standard four-point mixed stencil; error O(h_fd^2).
    """
    x = np.asarray(x, dtype=float)
    N = x.size
    Ax = np.asarray(A(x), dtype=float)
    grad = []
    for i in range(N):
        e = np.zeros(N)
        e[i] = h_fd
        grad.append((np.asarray(phi(x + e)) - np.asarray(phi(x - e))) / (2 * h_fd))
    grad = np.stack(grad, axis=-1)  # (M, N)
    if which != "L":
        _, j = which
        return grad @ Ax[:, j]
    out = grad @ np.asarray(mu(x), dtype=float)
    a = Ax @ Ax.T
    f0 = np.asarray(phi(x))
    for i in range(N):
        for k in range(N):
            if a[i, k] == 0.0:
                continue
            ei = np.zeros(N)
            ek = np.zeros(N)
            ei[i] = h_fd
            ek[k] = h_fd
            if i == k:
                d2 = (np.asarray(phi(x + ei)) - 2 * f0 + np.asarray(phi(x - ei))) / h_fd**2
            else:
                d2 = (
                    np.asarray(phi(x + ei + ek)) - np.asarray(phi(x + ei - ek))
                    - np.asarray(phi(x - ei + ek)) + np.asarray(phi(x - ei - ek))
                ) / (4 * h_fd**2)
            out = out + 0.5 * a[i, k] * d2
    return out


# nested forward-mode operator application --------------------------------------------


def _apply_L(mu, A, phi):
    def L_phi(x):
        J = jax.jacfwd(phi)(x)
        H = jax.jacfwd(jax.jacfwd(phi))(x)
        Ax = A(x)
        a = Ax @ Ax.T
        return J @ mu(x) + 0.5 * jnp.einsum("mij,ij->m", H, a)

    return L_phi


def _apply_Lj(A, phi, j):
    def Lj_phi(x):
        return jax.jacfwd(phi)(x) @ A(x)[:, j]

    return Lj_phi


_AD_CACHE: dict = {}


def _ad_function(model: HypoModel, kind: str, k: int, block: str):
    key = (type(model), model.id, model.consts, kind, k, block)
    if key not in _AD_CACHE:
        sl = model.mclass.block_slice(block)

        def f(x, th):
            mu = lambda y: model.drift(y, th)  # noqa: E731
            A = lambda y: model.diffusion(y, th)  # noqa: E731
            phi = lambda y: mu(y)[sl]  # noqa: E731
            if kind == "gen":
                for _ in range(k - 1):
                    phi = _apply_L(mu, A, phi)
                return phi(x)
            if block == "S1":
                phi = _apply_L(mu, A, phi)
            return _apply_Lj(A, phi, k)(x)

        _AD_CACHE[key] = jax.jit(f)
    return _AD_CACHE[key]


def ad_generator_iterate(model: HypoModel, k: int, block: str, x, theta) -> np.ndarray:
    """L^{k-1} mu_block by nested forward-mode AD on the raw fields."""
    th = jnp.asarray(np.asarray(theta_array(theta), dtype=float))
    return np.asarray(_ad_function(model, "gen", k, block)(jnp.asarray(x, dtype=jnp.float64), th))


def ad_directional(model: HypoModel, j: int, block: str, x, theta) -> np.ndarray:
    """L_j mu_block for S/S2, L_j L mu_S1 for block S1."""
    th = jnp.asarray(np.asarray(theta_array(theta), dtype=float))
    return np.asarray(_ad_function(model, "dir", j, block)(jnp.asarray(x, dtype=jnp.float64), th))


# joint Gaussian composition for the partially observed FHN scheme -----------------


def joint_gaussian_loglik(schemes: Sequence, obs_x, prior=(0.0, 1.0)) -> float:
    """Log-density of X_1..X_n under the affine-Gaussian scheme, by direct composition.

    ``schemes[k-1]`` holds (a, b, Sigma_p) for the step X_{k-1} -> Z_k.
    Every Z_k is written as an affine map of the independent inputs
    (Y_0, e_1, ..., e_n), the implied joint Gaussian is assembled, the hidden
    Y coordinates are dropped and the X-marginal density is evaluated.
    """
    xs = np.asarray(obs_x, dtype=float)
    n = xs.size - 1
    if n > 8:
        raise ValueError("dense composition is meant for n <= 8")
    if len(schemes) != n:
        raise ValueError(f"need {n} scheme steps, got {len(schemes)}")
    dim = 1 + 2 * n
    D = np.zeros((dim, dim))
    D[0, 0] = prior[1]
    for k, sc in enumerate(schemes):
        D[1 + 2 * k : 3 + 2 * k, 1 + 2 * k : 3 + 2 * k] = sc.Sigma_p
    # Y_prev as (offset, coefficient row over inputs)
    y_off = float(prior[0])
    y_row = np.zeros(dim)
    y_row[0] = 1.0
    mean_x = np.zeros(n)
    rows_x = np.zeros((n, dim))
    for k, sc in enumerate(schemes):
        a, b = np.asarray(sc.a), np.asarray(sc.b)
        e_x = np.zeros(dim)
        e_y = np.zeros(dim)
        e_x[1 + 2 * k] = 1.0
        e_y[2 + 2 * k] = 1.0
        mean_x[k] = a[0] + b[0] * y_off
        rows_x[k] = b[0] * y_row + e_x
        y_off, y_row = a[1] + b[1] * y_off, b[1] * y_row + e_y
    C = rows_x @ D @ rows_x.T
    sign, logdet = np.linalg.slogdet(C)
    if sign <= 0:
        raise ValueError("marginal covariance of X is singular")
    r = xs[1:] - mean_x
    return float(-0.5 * (n * np.log(2 * np.pi) + logdet + r @ np.linalg.solve(C, r)))


# Monte-Carlo conditional moments ---------------------------------------------------------


@dataclass
class MomentEstimate:
    mean: np.ndarray
    second: np.ndarray
    cov: np.ndarray
    mc_se: np.ndarray
    second_se: np.ndarray
    n_draws: int


def _ode_moments(mu, A, x, delta, steps):
    """RK4 for the deterministic path and the covariance of the linearised process."""
    N = x.shape[0]
    AAt = A @ A.T
    J = jax.jacfwd(mu)

    def rhs(state):
        y, P = state
        Jy = J(y)
        return mu(y), Jy @ P + P @ Jy.T + AAt

    def step(state, _):
        h = delta / steps
        k1 = rhs(state)
        k2 = rhs(jax.tree.map(lambda s, k: s + 0.5 * h * k, state, k1))
        k3 = rhs(jax.tree.map(lambda s, k: s + 0.5 * h * k, state, k2))
        k4 = rhs(jax.tree.map(lambda s, k: s + h * k, state, k3))
        new = jax.tree.map(lambda s, a, b, c, d: s + h / 6 * (a + 2 * b + 2 * c + d), state, k1, k2, k3, k4)
        return new, None

    (y, P), _ = jax.lax.scan(step, (x, jnp.zeros((N, N))), None, length=steps)
    return y, P


BLOCK = 1000  # pairs per RNG sub-stream


def _simulate_pairs(mu, A, x, delta, substeps, keys, n_pairs):
    """Weak order-2 scheme for X and the matching linearised scheme for Z on antithetic pairs.

    ``keys`` holds one sub-stream key per block of BLOCK pairs.
    """
    N, d = A.shape
    h = delta / substeps
    J = jax.jacfwd(mu)
    Hs = jax.jacfwd(jax.jacfwd(mu))

    def Lmu(y):
        # generator applied to mu with constant A
        return J(y) @ mu(y) + 0.5 * jnp.einsum("mij,ik,jk->m", Hs(y), A, A)

    def det_step(y, _):
        Jy = J(y)
        return y + mu(y) * h + 0.5 * Lmu(y) * h * h, (y, Jy)

    _, (ybar, Js) = jax.lax.scan(det_step, x, None, length=substeps)
    ybar_end = ybar[-1] + mu(ybar[-1]) * h + 0.5 * Lmu(ybar[-1]) * h * h

    def stoch_step(carry, inp):
        X, Z = carry
        k, yk, Jk = inp
        xi = jax.vmap(lambda kb: jax.random.normal(jax.random.fold_in(kb, k), (2, BLOCK, d)))(keys)
        xi = jnp.moveaxis(xi, 1, 0).reshape(2, -1, d)[:, :n_pairs]
        xi = jnp.concatenate([xi, -xi], axis=1)
        dW = jnp.sqrt(h) * xi[0]
        dZ = h**1.5 * (0.5 * xi[0] + xi[1] / (2 * sqrt(3.0)))
        JX = jax.vmap(J)(X)
        X = X + jax.vmap(mu)(X) * h + dW @ A.T + jnp.einsum("nij,jk,nk->ni", JX, A, dZ) + 0.5 * jax.vmap(Lmu)(X) * h * h
        M = jnp.eye(N) + Jk * h + 0.5 * (Jk @ Jk) * h * h
        Z = Z @ M.T + dW @ A.T + dZ @ (Jk @ A).T
        return (X, Z), None

    X0 = jnp.broadcast_to(x, (2 * n_pairs, N))
    (X, Z), _ = jax.lax.scan(stoch_step, (X0, jnp.zeros_like(X0)), (jnp.arange(substeps), ybar, Js))
    return X, Z, ybar_end


_SIM_CACHE: dict = {}


def mc_endpoints(model: HypoModel, x, theta, delta: float, n_draws: int, fine_substeps: int = 100,
                 seed: int = 0, chunk_blocks: int = 10):
    """Simulated endpoints X, linearised endpoints Z, the two deterministic paths and exact P."""
    if fine_substeps < 50:
        raise ValueError("fine_substeps must be >= 50")
    if n_draws < 4 or n_draws % 2:
        raise ValueError("n_draws must be an even number >= 4 (antithetic pairs)")
    th = jnp.asarray(np.asarray(theta_array(theta), dtype=float))
    xj = jnp.asarray(np.asarray(x, dtype=float))
    A = jnp.asarray(np.asarray(model.diffusion(np.asarray(x, dtype=float), np.asarray(th)), dtype=float))
    for probe in np.random.default_rng(seed).normal(size=(3, xj.shape[0])):
        if not np.allclose(np.asarray(model.diffusion(probe, np.asarray(th))), np.asarray(A)):
            raise ModelError("Monte-Carlo oracle assumes a state-independent diffusion")
    key_model = (type(model), model.id, model.consts)
    if key_model not in _SIM_CACHE:

        def sim(th, x, A, delta, keys, substeps, n_pairs):
            return _simulate_pairs(lambda y: model.drift(y, th), A, x, delta, substeps, keys, n_pairs)

        def ode(th, x, A, delta, steps):
            return _ode_moments(lambda y: model.drift(y, th), A, x, delta, steps)

        _SIM_CACHE[key_model] = (
            jax.jit(sim, static_argnames=("substeps", "n_pairs")),
            jax.jit(ode, static_argnames=("steps",)),
        )
    sim, ode = _SIM_CACHE[key_model]
    base = jax.random.PRNGKey(seed)
    Xs, Zs = [], []
    n_pairs_total = n_draws // 2
    per = chunk_blocks * BLOCK
    for start in range(0, n_pairs_total, per):
        n_pairs = min(per, n_pairs_total - start)
        b0 = start // BLOCK
        keys = jnp.stack([jax.random.fold_in(base, b) for b in range(b0, b0 + -(-n_pairs // BLOCK))])
        X, Z, ybar = sim(th, xj, A, delta, keys, fine_substeps, n_pairs)
        X, Z = np.asarray(X), np.asarray(Z)
        if not np.all(np.isfinite(X)) or np.abs(X).max() > 1e8:
            raise ModelError("Monte-Carlo oracle path exploded")
        # keep antithetic partners adjacent: rows i and i + n_pairs form a pair
        Xs.append(np.stack([X[:n_pairs], X[n_pairs:]], axis=1))
        Zs.append(np.stack([Z[:n_pairs], Z[n_pairs:]], axis=1))
    y_exact, P = ode(th, xj, A, delta, 20 * fine_substeps)
    return np.concatenate(Xs), np.concatenate(Zs), np.asarray(ybar), np.asarray(y_exact), np.asarray(P)


def moments_from_endpoints(model: HypoModel, theta, x, delta, p: int, endpoints,
                           control_variate: bool = True) -> MomentEstimate:
    """Estimates of E[m] and E[m m^T] for the order-p residual.

    Without the control variate these are plain antithetic sample moments.
    """
    X, Z, ybar, y_exact, P = endpoints
    th = np.asarray(theta_array(theta), dtype=float)
    K = p // 2
    r = np.asarray(mean_array(model, K, delta, np.asarray(x, dtype=float), th))
    scale = np.asarray(residual_divisors(model.mclass, delta))
    m = (X - r) / scale  # (pairs, 2, N)
    mz = (ybar + Z - r) / scale
    mu_e = (y_exact - r) / scale
    mm = np.einsum("pai,paj->paij", m, m)
    npairs = X.shape[0]
    if control_variate:
        d1 = (m - mz).mean(axis=1)
        d2 = (mm - np.einsum("pai,paj->paij", mz, mz)).mean(axis=1)
        mean = d1.mean(axis=0) + mu_e
        second = d2.mean(axis=0) + np.outer(mu_e, mu_e) + P / np.outer(scale, scale)
    else:
        d1, d2 = m.mean(axis=1), mm.mean(axis=1)
        mean, second = d1.mean(axis=0), d2.mean(axis=0)
    mc_se = d1.std(axis=0, ddof=1) / np.sqrt(npairs)
    second_se = d2.std(axis=0, ddof=1) / np.sqrt(npairs)
    cov = second - np.outer(mean, mean)
    return MomentEstimate(mean, second, 0.5 * (cov + cov.T), np.maximum(mc_se, 1e-300),
                          np.maximum(second_se, 1e-300), 2 * npairs)


def mc_conditional_moments(model: HypoModel, x, theta, delta: float, n_draws: int, fine_substeps: int = 100,
                           p: int = 2, seed: int = 0, control_variate: bool = True) -> MomentEstimate:
    """Monte-Carlo moments of the standardised residual m_p over one step from x.

    Paths use a weak order-2 sub-stepped scheme on the raw fields.  Antithetic
    pairs and a linearised Gaussian control variate (moments propagated
    exactly along the deterministic path) reduce the variance; for linear
    models the control variate is exact.
    """
    ends = mc_endpoints(model, x, theta, delta, n_draws, fine_substeps, seed)
    return moments_from_endpoints(model, theta, x, delta, p, ends, control_variate)


__all__ = [
    "LinearSdeForm",
    "MomentEstimate",
    "ad_directional",
    "ad_generator_iterate",
    "fd_gradient",
    "fd_operator_apply",
    "joint_gaussian_loglik",
    "linear_form",
    "linear_sde_exact_moments",
    "mc_conditional_moments",
    "mc_endpoints",
    "moments_from_endpoints",
]
