from __future__ import annotations

from .. import model as _m
from .._xp import namespace
from . import _closed_forms as cf


def _comps(x):
    return tuple(x[..., i] for i in range(x.shape[-1]))


class ClosedFormModel(_m.HypoModel):
    """Model whose ingredients are looked up in the generated closed forms."""

    prefix: str

    def __init__(self, consts=()):
        self.consts = tuple(float(c) for c in consts)

    def _call(self, name, x, th):
        xp = namespace(x, th)
        x = xp.asarray(x, dtype=xp.float64)
        th = xp.asarray(th, dtype=xp.float64)
        fn = getattr(cf, f"{self.prefix}_{name}")
        vals = fn(_comps(x), tuple(th[i] for i in range(th.shape[0])), self.consts)
        return _m.stack_components(vals, x.shape[:-1], xp)

    def drift(self, x, th):
        return self._call("drift", x, th)

    def diffusion(self, x, th):
        return self._call("diffusion", x, th)[..., None]

    def _gen_mu(self, k, block, x, th):
        return self._call(f"gen_mu_{block}_{k}", x, th)

    def _dir_mu(self, j, block, x, th):
        return self._call(f"dir_mu_{block}", x, th)

    def _cov(self, j, x, th):
        xp = namespace(x, th)
        upper = self._call(f"cov_{j}", x, th)
        N = self.mclass.N
        rows = []
        for a in range(N):
            row = []
            for b in range(N):
                i, k = min(a, b), max(a, b)
                row.append(upper[..., i * N - i * (i - 1) // 2 + (k - i)])
            rows.append(xp.stack(row, axis=-1))
        return xp.stack(rows, axis=-2)

    def _cov_correction(self, j, x, th):
        return self._cov(j, x, th)

    def cov_leading_closed_form(self, x, th):
        """Sigma from the series derivation, an independent route to the block formulas."""
        return self._cov(0, x, th)
