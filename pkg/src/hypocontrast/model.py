"""Hypo-elliptic SDE abstraction: model classes, parameter layout, ingredients.

A model supplies its raw fields (drift mu, diffusion columns A_k) plus closed
forms for the generator iterates L^{k-1} mu_block, the directional terms
L_k mu_block (and L_k L mu_S1 for class II) and the covariance corrections
Sigma_j.  All evaluators are array-namespace generic: they accept numpy or
jax arrays with an arbitrary leading batch shape ``(..., N)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._xp import namespace


class ModelError(ValueError):
    """Raised for invalid model evaluations (dimensions, orders, bad fields)."""


class UnsupportedOrderError(ModelError):
    pass


class HypoClass(str, enum.Enum):
    HYPO_I = "HypoI"
    HYPO_II = "HypoII"


BLOCKS = {HypoClass.HYPO_I: ("S", "R"), HypoClass.HYPO_II: ("S1", "S2", "R")}

# Variance exponent of the one-step increment per block.  The residual of a
# block is divided by Delta^{s/2}; covariance entry (a, b) lives at
# Delta^{(s_a + s_b)/2}.  Keep every scaling decision keyed off this table.
VAR_POWERS = {
    HypoClass.HYPO_I: {"S": 3, "R": 1},
    HypoClass.HYPO_II: {"S1": 5, "S2": 3, "R": 1},
}

# mean order of a block is K_p + shift
MEAN_SHIFT = {
    HypoClass.HYPO_I: {"S": 1, "R": 0},
    HypoClass.HYPO_II: {"S1": 2, "S2": 1, "R": 0},
}


@dataclass(frozen=True)
class ModelClass:
    tag: HypoClass
    dims: tuple[int, ...]
    d: int

    def __post_init__(self):
        tag = HypoClass(self.tag)
        object.__setattr__(self, "tag", tag)
        if len(self.dims) != len(BLOCKS[tag]):
            raise ModelError(f"{tag.value} needs {len(BLOCKS[tag])} block sizes, got {self.dims}")
        if any(int(n) < 1 for n in self.dims) or self.d < 1:
            raise ModelError(f"dimension counts must be >= 1, got dims={self.dims}, d={self.d}")

    @property
    def blocks(self) -> tuple[str, ...]:
        return BLOCKS[self.tag]

    @property
    def N(self) -> int:
        return int(sum(self.dims))

    def block_slice(self, block: str) -> slice:
        start = 0
        for name, size in zip(self.blocks, self.dims):
            if name == block:
                return slice(start, start + size)
            start += size
        raise ModelError(f"unknown block {block!r} for class {self.tag.value}")

    def block_size(self, block: str) -> int:
        s = self.block_slice(block)
        return s.stop - s.start

    def var_power(self, block: str) -> int:
        return VAR_POWERS[self.tag][block]

    def component_powers(self) -> np.ndarray:
        """Variance exponent s_a for every state component."""
        return np.concatenate(
            [np.full(n, VAR_POWERS[self.tag][b], dtype=np.int64) for b, n in zip(self.blocks, self.dims)]
        )

    def mean_order(self, block: str, K: int) -> int:
        return K + MEAN_SHIFT[self.tag][block]

    def smooth_blocks(self) -> tuple[str, ...]:
        return self.blocks[:-1]


PARAM_BLOCKS = ("S", "S1", "S2", "R", "sigma")


@dataclass(frozen=True)
class ParamLayout:
    """Names, block membership and compact box of the parameter vector."""

    names: tuple[str, ...]
    blocks: tuple[str, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.blocks) == len(self.lo) == len(self.hi) == n):
            raise ModelError("parameter layout fields must have equal length")
        for b in self.blocks:
            if b not in PARAM_BLOCKS:
                raise ModelError(f"unknown parameter block {b!r}")
        for name, a, b in zip(self.names, self.lo, self.hi):
            if not a < b:
                raise ModelError(f"empty box for {name}: [{a}, {b}]")

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def lo_array(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    @property
    def hi_array(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo_array + self.hi_array)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ModelError(f"no parameter named {name!r}; have {self.names}") from None

    def block_indices(self, block: str) -> list[int]:
        return [i for i, b in enumerate(self.blocks) if b == block]

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        return bool(np.all(t >= self.lo_array) and np.all(t <= self.hi_array))

    def project(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lo_array, self.hi_array)

    def with_box(self, lo: Sequence[float], hi: Sequence[float]) -> "ParamLayout":
        return ParamLayout(self.names, self.blocks, tuple(map(float, lo)), tuple(map(float, hi)))


@dataclass(frozen=True)
class ParamVector:
    layout: ParamLayout
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.layout.size:
            raise ModelError(f"expected {self.layout.size} parameters, got {len(self.values)}")

    @classmethod
    def from_array(cls, layout: ParamLayout, values) -> "ParamVector":
        return cls(layout, tuple(float(v) for v in np.asarray(values, dtype=float).ravel()))

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def block(self, name: str) -> np.ndarray:
        return self.array()[self.layout.block_indices(name)]

    beta_S = property(lambda self: self.block("S"))
    beta_S1 = property(lambda self: self.block("S1"))
    beta_S2 = property(lambda self: self.block("S2"))
    beta_R = property(lambda self: self.block("R"))
    sigma = property(lambda self: self.block("sigma"))

    def projected(self) -> "ParamVector":
        return ParamVector.from_array(self.layout, self.layout.project(self.values))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.layout.names, self.values))


def theta_array(theta):
    """Accept ParamVector, sequences, numpy or jax arrays."""
    if isinstance(theta, ParamVector):
        return theta.array()
    return theta


class HypoModel:
    """Base class for models.  Subclasses fill in the evaluators.

    ``orders`` maps each block to the highest k for which L^{k-1} mu_block is
    available; ``n_corrections`` is the highest j with Sigma_j available.
    """

    id: str = "custom"
    mclass: ModelClass
    layout: ParamLayout
    consts: tuple[float, ...] = ()
    max_p: int = 2
    orders: dict[str, int]
    n_corrections: int = 0
    true_theta: tuple[float, ...] | None = None

    # raw fields
    def drift(self, x, th):
        raise NotImplementedError

    def diffusion(self, x, th):
        """Diffusion matrix with shape (..., N, d)."""
        raise NotImplementedError

    # closed-form ingredients
    def _gen_mu(self, k: int, block: str, x, th):
        raise NotImplementedError

    def _dir_mu(self, j: int, block: str, x, th):
        raise NotImplementedError

    def _cov_correction(self, j: int, x, th):
        raise NotImplementedError

    def gen_mu(self, k: int, block: str, x, th):
        """L^{k-1} mu_block at x, shape (..., N_block)."""
        if block not in self.mclass.blocks:
            raise ModelError(f"unknown block {block!r} for {self.id}")
        top = self.orders.get(block, 0)
        if k < 1 or k > top:
            raise UnsupportedOrderError(
                f"{self.id}: L^(k-1) mu_{block} supplied for k=1..{top}, requested k={k}"
            )
        return self._gen_mu(k, block, x, th)

    def dir_mu(self, j: int, block: str, x, th):
        """L_j mu_block (S, S2) or L_j L mu_S1 (block 'S1'); j indexes noise columns from 0."""
        if not 0 <= j < self.mclass.d:
            raise ModelError(f"noise column {j} out of range 0..{self.mclass.d - 1}")
        if block not in self.mclass.smooth_blocks():
            raise ModelError(f"directional terms exist only for smooth blocks, got {block!r}")
        return self._dir_mu(j, block, x, th)

    def cov_correction(self, j: int, x, th):
        """Sigma_j(x, theta) with shape (..., N, N), j >= 1."""
        if j < 1 or j > self.n_corrections:
            raise UnsupportedOrderError(
                f"{self.id}: covariance corrections supplied for j=1..{self.n_corrections}, requested j={j}"
            )
        return self._cov_correction(j, x, th)

    def check_p(self, p: int) -> int:
        if p < 2 or p > self.max_p:
            raise UnsupportedOrderError(f"{self.id} supports p in 2..{self.max_p}, requested p={p}")
        return p // 2

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.layout.lo_array, self.layout.hi_array

    def __repr__(self):
        return f"<{type(self).__name__} {self.id} {self.mclass.tag.value} dims={self.mclass.dims}>"


def _check_state(model: HypoModel, x) -> None:
    n = np.shape(x)[-1] if np.ndim(x) else 1
    N = model.mclass.N
    if n == N:
        return
    # name the first block that is missing or overflowing
    start = 0
    for block, size in zip(model.mclass.blocks, model.mclass.dims):
        if n < start + size:
            raise ModelError(
                f"state has {n} entries but block {block} needs indices {start}..{start + size - 1}"
            )
        start += size
    raise ModelError(f"state has {n} entries, block layout {model.mclass.blocks} ends at {N}")


def evaluate_drift(model: HypoModel, x, theta):
    """Stacked drift mu(x, theta) in block order."""
    _check_state(model, x)
    return model.drift(x, theta_array(theta))


def evaluate_generator_term(model: HypoModel, k: int, block: str, x, theta):
    _check_state(model, x)
    return model.gen_mu(k, block, x, theta_array(theta))


@dataclass
class RankReport:
    passed: bool
    min_singular_values: list[dict[str, float]]
    tol: float


def _fd_jacobian(field, x, h):
    n = x.size
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append((field(x + e) - field(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def _bracket(v, w, x, h):
    """[V, W](x) = (dW) V - (dV) W by central differences."""
    return _fd_jacobian(w, x, h) @ v(x) - _fd_jacobian(v, x, h) @ w(x)


def hormander_rank_check(model: HypoModel, theta, points, tol: float = 1e-8) -> RankReport:
    """Numeric check of the span conditions at sample points only."""
    th = np.asarray(theta_array(theta), dtype=float)
    points = [np.asarray(p, dtype=float) for p in points]
    if not points:
        raise ModelError("hormander_rank_check needs at least one point")
    mc = model.mclass
    rough = mc.block_slice("R")
    results = []
    ok = True
    for pt in points:
        h = 1e-5 * (1.0 + float(np.max(np.abs(pt))))

        def A(y):
            return np.asarray(model.diffusion(y, th), dtype=float)

        def A0(y):
            # Stratonovich-corrected drift
            mu = np.asarray(model.drift(y, th), dtype=float)
            J = np.stack([_fd_jacobian(lambda z, k=k: A(z)[:, k], y, h) for k in range(mc.d)])
            corr = sum(J[k] @ A(y)[:, k] for k in range(mc.d))
            return mu - 0.5 * corr

        Ax = A(pt)
        if not (np.all(np.isfinite(Ax)) and np.all(np.isfinite(A0(pt)))):
            raise ModelError(f"non-finite vector field at point {pt.tolist()}")
        cols = [lambda y, k=k: A(y)[:, k] for k in range(mc.d)]
        b1 = [lambda y, c=c: _bracket(A0, c, y, h) for c in cols]
        span_rough = Ax[rough, :]
        first = np.column_stack([Ax] + [b(pt) for b in b1])
        sv = {"rough": float(np.linalg.svd(span_rough, compute_uv=False).min())}
        if mc.tag is HypoClass.HYPO_I:
            sv["full"] = float(np.linalg.svd(first, compute_uv=False)[mc.N - 1]) if first.shape[1] >= mc.N else 0.0
        else:
            n1 = mc.block_size("S1")
            sub = first[n1:, :]
            sv["S2R"] = float(np.linalg.svd(sub, compute_uv=False)[mc.N - n1 - 1]) if sub.shape[1] >= mc.N - n1 else 0.0
            # second-order brackets by nested differences; use a larger step
            h2 = 1e-3 * (1.0 + float(np.max(np.abs(pt))))
            b2 = [_fd_jacobian(b, pt, h2) @ A0(pt) - _fd_jacobian(A0, pt, h2) @ b(pt) for b in b1]
            full = np.column_stack([first] + b2)
            sv["full"] = float(np.linalg.svd(full, compute_uv=False)[mc.N - 1]) if full.shape[1] >= mc.N else 0.0
        if min(sv.values()) <= tol:
            ok = False
        results.append(sv)
    return RankReport(ok, results, tol)


def stack_components(vals, batch_shape, xp=None):
    """Stack scalar-or-array components into an array with trailing axis."""
    xp = xp or namespace(*vals)
    return xp.stack([xp.broadcast_to(xp.asarray(v, dtype=xp.float64), batch_shape) for v in vals], axis=-1)


__all__ = [
    "ModelError",
    "UnsupportedOrderError",
    "HypoClass",
    "ModelClass",
    "ParamLayout",
    "ParamVector",
    "HypoModel",
    "RankReport",
    "VAR_POWERS",
    "evaluate_drift",
    "evaluate_generator_term",
    "hormander_rank_check",
    "stack_components",
]
