"""Underdamped Langevin equation, dq = p dt, dp = (-U'(q) + gamma p) dt + sigma dW.

The damping enters with a plus sign, so gamma < 0 is dissipative.  D is the
potential constant and is held fixed.
"""
from __future__ import annotations

from ..model import HypoClass, ModelClass, ParamLayout
from ._base import ClosedFormModel

LAYOUT = ParamLayout(
    names=("gamma", "sigma"),
    blocks=("R", "sigma"),
    lo=(-5.0, 0.05),
    hi=(-0.05, 5.0),
)


class UnderdampedLangevin(ClosedFormModel):
    mclass = ModelClass(HypoClass.HYPO_I, (1, 1), 1)
    layout = LAYOUT
    max_p = 4
    orders = {"S": 3, "R": 2}
    n_corrections = 2
    true_theta = (-1.0, 1.0)

    def __init__(self, potential: str = "quad", D: float = 1.0):
        if potential not in ("quad", "dw"):
            raise ValueError(f"potential must be 'quad' or 'dw', got {potential!r}")
        super().__init__((D,))
        self.potential = potential
        self.D = float(D)
        self.prefix = f"langevin_{potential}"
        self.id = f"langevin-{potential}"
