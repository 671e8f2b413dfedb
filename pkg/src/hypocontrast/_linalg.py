"""Small symmetric matrices: closed-form inverse/log-det and compensated sums.

Everything here works on batches ``(..., N, N)`` and on numpy or jax arrays.
The closed forms keep the hot path differentiable and branch-free; the PD
test is Sylvester's criterion on the leading minors.
"""
from __future__ import annotations

from ._xp import namespace


def sym_inv_logdet(S, xp=None):
    """Return (inverse, log det, positive-definite mask) for a batch of symmetric S."""
    xp = xp or namespace(S)
    N = S.shape[-1]
    if N == 1:
        a = S[..., 0, 0]
        ok = a > 0
        safe = xp.where(ok, a, 1.0)
        return (1.0 / safe)[..., None, None], xp.log(safe), ok
    if N == 2:
        a, b, c = S[..., 0, 0], S[..., 0, 1], S[..., 1, 1]
        det = a * c - b * b
        ok = (a > 0) & (det > 0)
        det = xp.where(ok, det, 1.0)
        inv = xp.stack([xp.stack([c, -b], -1), xp.stack([-b, a], -1)], -2) / det[..., None, None]
        return inv, xp.log(det), ok
    if N == 3:
        a, b, c = S[..., 0, 0], S[..., 0, 1], S[..., 0, 2]
        e, f, i = S[..., 1, 1], S[..., 1, 2], S[..., 2, 2]
        c00 = e * i - f * f
        c01 = c * f - b * i
        c02 = b * f - c * e
        c11 = a * i - c * c
        c12 = b * c - a * f
        c22 = a * e - b * b
        det = a * c00 + b * c01 + c * c02
        ok = (a > 0) & (c22 > 0) & (det > 0)
        det = xp.where(ok, det, 1.0)
        inv = xp.stack(
            [
                xp.stack([c00, c01, c02], -1),
                xp.stack([c01, c11, c12], -1),
                xp.stack([c02, c12, c22], -1),
            ],
            -2,
        ) / det[..., None, None]
        return inv, xp.log(det), ok
    # general fallback
    sign, logdet = xp.linalg.slogdet(S)
    ok = sign > 0
    return xp.linalg.inv(S), logdet, ok


def compensated_sum(v, xp=None):
    """Pairwise sum of a 1-D array with TwoSum error compensation at each level."""
    xp = xp or namespace(v)
    err = xp.zeros((), dtype=v.dtype)
    while v.shape[0] > 1:
        if v.shape[0] % 2:
            v = xp.concatenate([v, xp.zeros((1,), dtype=v.dtype)])
        a, b = v[0::2], v[1::2]
        s = a + b
        bb = s - a
        err = err + xp.sum((a - (s - bb)) + (b - bb))
        v = s
    if v.shape[0] == 0:
        return err
    return v[0] + err


def quad_form(m, M, xp=None):
    """m^T M m over a batch."""
    xp = xp or namespace(m, M)
    return xp.einsum("...i,...ij,...j->...", m, M, m)


def chol_small(S, xp=None):
    """Lower Cholesky factor of a batch of small SPD matrices (N <= 3 closed form)."""
    xp = xp or namespace(S)
    N = S.shape[-1]
    if N > 3:
        return xp.linalg.cholesky(S)
    L = [[None] * N for _ in range(N)]
    for j in range(N):
        d = S[..., j, j]
        for k in range(j):
            d = d - L[j][k] ** 2
        L[j][j] = xp.sqrt(d)
        for i in range(j + 1, N):
            v = S[..., i, j]
            for k in range(j):
                v = v - L[i][k] * L[j][k]
            # a zero pivot (degenerate noise) leaves the column empty
            piv = L[j][j]
            L[i][j] = xp.where(piv > 0, v / xp.where(piv > 0, piv, 1.0), 0.0)
    zero = xp.zeros_like(S[..., 0, 0])
    return xp.stack([xp.stack([L[i][j] if j <= i else zero for j in range(N)], -1) for i in range(N)], -2)


# Component form: a matrix is a list of rows of same-shaped arrays.  Every
# operation is elementwise, which XLA fuses into a single loop; batched tiny
# matmuls are an order of magnitude slower on CPU, more so under jacfwd.


def to_components(S):
    N = S.shape[-1]
    return [[S[..., i, j] for j in range(N)] for i in range(N)]


def matmul_c(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return [[sum(A[i][l] * B[l][j] for l in range(k)) for j in range(m)] for i in range(n)]


def trace_c(A):
    return sum(A[i][i] for i in range(len(A)))


def quad_c(m, A):
    N = len(A)
    return sum(m[i] * A[i][j] * m[j] for i in range(N) for j in range(N))


def sym_inv_logdet_c(S, xp):
    """Component-form version of sym_inv_logdet for N <= 3."""
    N = len(S)
    if N == 1:
        a = S[0][0]
        ok = a > 0
        safe = xp.where(ok, a, 1.0)
        return [[1.0 / safe]], xp.log(safe), ok
    if N == 2:
        a, b, c = S[0][0], S[0][1], S[1][1]
        det = a * c - b * b
        ok = (a > 0) & (det > 0)
        det = xp.where(ok, det, 1.0)
        r = 1.0 / det
        return [[c * r, -b * r], [-b * r, a * r]], xp.log(det), ok
    if N == 3:
        a, b, c = S[0][0], S[0][1], S[0][2]
        e, f, i = S[1][1], S[1][2], S[2][2]
        c00 = e * i - f * f
        c01 = c * f - b * i
        c02 = b * f - c * e
        c11 = a * i - c * c
        c12 = b * c - a * f
        c22 = a * e - b * b
        det = a * c00 + b * c01 + c * c02
        ok = (a > 0) & (c22 > 0) & (det > 0)
        det = xp.where(ok, det, 1.0)
        r = 1.0 / det
        return (
            [[c00 * r, c01 * r, c02 * r], [c01 * r, c11 * r, c12 * r], [c02 * r, c12 * r, c22 * r]],
            xp.log(det),
            ok,
        )
    raise ValueError("component-form inverse supports N <= 3")
