"""Stochastic FitzHugh-Nagumo model.

dx = (x - x^3 - y - s)/eps dt, dy = (gamma x - y + alpha) dt + sigma dW,
theta = (eps, gamma, alpha, sigma), s fixed.
"""
from __future__ import annotations

from ..model import HypoClass, ModelClass, ParamLayout
from ._base import ClosedFormModel

LAYOUT = ParamLayout(
    names=("eps", "gamma", "alpha", "sigma"),
    blocks=("S", "R", "R", "sigma"),
    lo=(0.01, 0.05, 0.0, 0.05),
    hi=(1.0, 3.0, 1.0, 1.5),
)


class Fhn(ClosedFormModel):
    mclass = ModelClass(HypoClass.HYPO_I, (1, 1), 1)
    layout = LAYOUT
    max_p = 4
    orders = {"S": 3, "R": 2}
    n_corrections = 2
    true_theta = (0.10, 1.50, 0.30, 0.60)

    def __init__(self, s: float = 0.01):
        super().__init__((s,))
        self.s = float(s)
        self.prefix = "fhn"
        self.id = "fhn"
