"""Quasi-Markovian generalised Langevin equation with one auxiliary variable.

dq = p dt, dp = (-U'(q) + lam s) dt, ds = (-lam p - alpha s) dt + sigma dW,
theta = (D, lam, alpha, sigma).  lam also enters the rough drift; it is
identified at the faster S2 rate, so it sits in the S2 block.
"""
from __future__ import annotations

from ..model import HypoClass, ModelClass, ParamLayout
from ._base import ClosedFormModel

LAYOUT = ParamLayout(
    names=("D", "lam", "alpha", "sigma"),
    blocks=("S2", "S2", "R", "sigma"),
    lo=(0.5, 0.5, 0.5, 0.5),
    hi=(5.0, 5.0, 8.0, 8.0),
)

TRUE_THETA = {"quad": (2.0, 2.0, 4.0, 4.0), "dw": (2.0, 1.0, 4.0, 4.0)}


class QGle(ClosedFormModel):
    mclass = ModelClass(HypoClass.HYPO_II, (1, 1, 1), 1)
    layout = LAYOUT
    max_p = 3
    orders = {"S1": 3, "S2": 2, "R": 1}
    n_corrections = 1

    def __init__(self, potential: str = "quad"):
        if potential not in ("quad", "dw"):
            raise ValueError(f"potential must be 'quad' or 'dw', got {potential!r}")
        super().__init__()
        self.potential = potential
        self.prefix = f"qgle_{potential}"
        self.id = f"qgle-{potential}"
        self.true_theta = TRUE_THETA[potential]
