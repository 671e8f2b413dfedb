"""Synthetic data: locally Gaussian paths on a fine grid, sub-sampled to a design.

Each replication draws its noise from its own PCG64 stream seeded with
``seed + replication index``, so results do not depend on how replications
are batched or scheduled.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jax
import jax.numpy as jnp
import numpy as np

from ._linalg import chol_small
from ._xp import namespace
from .model import HypoModel, ModelError, theta_array
from .moments import mean_array, residual_divisors, sigma0_array

EXPLOSION = 1e8
MAX_LG_STEP = 0.01


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ObservationDesign:
    delta: float
    n: int
    fine_delta: float = 1e-4
    seed: int = 0
    burn_in: float = 10.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0 < self.fine_delta <= self.delta:
            raise ValueError(f"fine_delta must lie in (0, delta], got {self.fine_delta}")
        _ = self.stride

    @property
    def t_horizon(self) -> float:
        return self.n * self.delta

    @property
    def stride(self) -> int:
        return stride_of(self.delta, self.fine_delta)


def stride_of(delta: float, fine_delta: float) -> int:
    ratio = delta / fine_delta
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-12 * max(1.0, ratio):
        raise ValueError(f"delta={delta} is not an integer multiple of fine_delta={fine_delta}")
    return k


@dataclass
class ObservationSet:
    states: np.ndarray
    design: ObservationDesign
    model_id: str
    true_theta: tuple[float, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.design.n + 1:
            raise ValueError(f"expected {self.design.n + 1} rows, got shape {self.states.shape}")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("observation set contains non-finite values")

    @property
    def delta(self) -> float:
        return self.design.delta

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.design.n + 1) * self.design.delta


# one-step scheme -------------------------------------------------------------


def lg_step_array(model: HypoModel, x, th, h, noise):
    """Order-2 mean plus diag(h^{s/2}) chol(Sigma) noise; batched, numpy or jax."""
    xp = namespace(x, th, noise)
    r = mean_array(model, 1, h, x, th)
    L = chol_small(sigma0_array(model, x, th), xp)
    return r + residual_divisors(model.mclass, h, xp) * xp.einsum("...ij,...j->...i", L, noise)


def simulate_lg_step(model: HypoModel, x, theta, h: float, noise) -> np.ndarray:
    if not 0 < h <= MAX_LG_STEP:
        raise ModelError(f"locally Gaussian step needs 0 < h <= {MAX_LG_STEP}, got {h}")
    x = np.asarray(x, dtype=float)
    th = np.asarray(theta_array(theta), dtype=float)
    noise = np.asarray(noise, dtype=float)
    N = model.mclass.N
    if noise.shape[-1] != N:
        raise ModelError(f"noise must have {N} components (one per state coordinate), got {noise.shape[-1]}")
    S = np.asarray(sigma0_array(model, x, th))
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ModelError(f"leading covariance not factorisable at x={x.tolist()}, theta={th.tolist()}") from None
    return np.asarray(lg_step_array(model, x, th, h, noise))


# path simulation ---------------------------------------------------------------

_RUNNERS: dict = {}


def _runner(model: HypoModel):
    key = (type(model), model.id, model.consts)
    if key not in _RUNNERS:

        def run(x, th, h, noise):
            # noise: (n_rec, stride, R, N); returns last state and recorded rows
            def inner(x, eps):
                return lg_step_array(model, x, th, h, eps), None

            def outer(x, block):
                x, _ = jax.lax.scan(inner, x, block)
                return x, x

            return jax.lax.scan(outer, x, noise)

        _RUNNERS[key] = jax.jit(run)
    return _RUNNERS[key]


class _Streams:
    def __init__(self, seeds, N):
        self.gens = [np.random.Generator(np.random.PCG64(int(s))) for s in seeds]
        self.N = N

    def draw(self, steps):
        return np.stack([g.standard_normal((steps, self.N)) for g in self.gens], axis=1)


def _advance(model, x, th, h, streams, n_rec, stride, record, chunk_fine=400_000):
    """Run n_rec*stride fine steps, keeping every stride-th state if record."""
    R, N = x.shape
    per_chunk = max(1, chunk_fine // (stride * max(1, R)))
    out = []
    run = _runner(model)
    done = 0
    xj = jnp.asarray(x)
    thj = jnp.asarray(th)
    while done < n_rec:
        k = min(per_chunk, n_rec - done)
        eps = streams.draw(k * stride).reshape(k, stride, R, N)
        xj, rec = run(xj, thj, h, jnp.asarray(eps))
        rec = np.asarray(rec)
        bad = ~np.isfinite(rec) | (np.abs(rec) > EXPLOSION)
        if bad.any():
            i, rep = np.argwhere(bad.any(axis=2))[0]
            t = (done + i + 1) * stride * h
            raise SimulationError(
                f"path exploded (|state| > {EXPLOSION:g}) in replication {rep} at fine time {t:.6g}, "
                f"theta={np.asarray(th).tolist()}"
            )
        if record:
            out.append(rec)
        done += k
    x_end = np.asarray(xj)
    return x_end, (np.concatenate(out, axis=0) if record else None)


def simulate_paths(model: HypoModel, theta, design: ObservationDesign, replications: int = 1,
                   first_index: int = 0, x0=None) -> np.ndarray:
    """Sub-sampled observations for a batch of replications, shape (R, n+1, N).

    Replication r uses seed ``design.seed + first_index + r``.  Burn-in runs
    from x0 (default origin) for ``design.burn_in`` time units.
    """
    th = np.asarray(theta_array(theta), dtype=float)
    N = model.mclass.N
    h = design.fine_delta
    if h > MAX_LG_STEP:
        raise ModelError(f"fine step {h} exceeds the locally Gaussian limit {MAX_LG_STEP}")
    seeds = [design.seed + first_index + r for r in range(replications)]
    streams = _Streams(seeds, N)
    x = np.zeros((replications, N)) if x0 is None else np.broadcast_to(np.asarray(x0, float), (replications, N)).copy()
    burn = int(round(design.burn_in / h))
    if burn:
        x, _ = _advance(model, x, th, h, streams, burn, 1, record=False)
    x_start = x.copy()
    _, rec = _advance(model, x, th, h, streams, design.n, design.stride, record=True)
    paths = np.concatenate([x_start[None], rec], axis=0)
    return np.transpose(paths, (1, 0, 2))


def simulate_fine_path(model: HypoModel, theta, design: ObservationDesign, x0=None) -> np.ndarray:
    """Whole fine path (t_horizon/fine_delta + 1 rows) for one replication."""
    fine = ObservationDesign(
        design.fine_delta, design.n * design.stride, design.fine_delta, design.seed, design.burn_in
    )
    return simulate_paths(model, theta, fine, 1, 0, x0)[0]


def subsample(fine_path, design: ObservationDesign, model_id: str = "", true_theta=None) -> ObservationSet:
    stride = design.stride
    fine_path = np.asarray(fine_path, dtype=float)
    rows = fine_path[::stride]
    if rows.shape[0] != design.n + 1:
        raise ValueError(
            f"fine path of {fine_path.shape[0]} rows gives {rows.shape[0]} observations, design wants {design.n + 1}"
        )
    return ObservationSet(rows, design, model_id, None if true_theta is None else tuple(map(float, true_theta)))


def simulate_observations(model: HypoModel, theta, design: ObservationDesign, replications: int = 1,
                          first_index: int = 0, x0=None) -> list[ObservationSet]:
    th = np.asarray(theta_array(theta), dtype=float)
    paths = simulate_paths(model, th, design, replications, first_index, x0)
    out = []
    for r in range(replications):
        d = ObservationDesign(design.delta, design.n, design.fine_delta, design.seed + first_index + r, design.burn_in)
        out.append(
            ObservationSet(paths[r], d, model.id, tuple(th.tolist()),
                           {"x0": "origin" if x0 is None else list(np.ravel(x0)), "burn_in": design.burn_in})
        )
    return out


# persistence -------------------------------------------------------------------


def write_observations(obs: ObservationSet, path) -> tuple[Path, Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    N = obs.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(N)])
        for t, row in zip(obs.times, obs.states):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    side = path.with_suffix(".json")
    meta = {
        "model_id": obs.model_id,
        "design": asdict(obs.design),
        "seed": obs.design.seed,
        "true_theta": None if obs.true_theta is None else list(obs.true_theta),
        "meta": obs.meta,
    }
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def read_observations(path) -> ObservationSet:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
        design = ObservationDesign(**meta["design"])
        tt = meta.get("true_theta")
        return ObservationSet(data[:, 1:], design, meta.get("model_id", ""),
                              None if tt is None else tuple(tt), meta.get("meta", {}))
    t = data[:, 0]
    delta = float(t[1] - t[0])
    design = ObservationDesign(delta, data.shape[0] - 1, delta)
    return ObservationSet(data[:, 1:], design, "")


__all__ = [
    "ObservationDesign",
    "ObservationSet",
    "SimulationError",
    "read_observations",
    "simulate_fine_path",
    "simulate_lg_step",
    "simulate_observations",
    "simulate_paths",
    "subsample",
    "write_observations",
]
