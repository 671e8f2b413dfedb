"""Built-in models addressable by string id."""
from __future__ import annotations

from ..model import HypoModel, ModelError
from .fhn import Fhn
from .langevin import UnderdampedLangevin
from .qgle import QGle

_FACTORIES = {
    "langevin-quad": lambda: UnderdampedLangevin("quad"),
    "langevin-dw": lambda: UnderdampedLangevin("dw"),
    "qgle-quad": lambda: QGle("quad"),
    "qgle-dw": lambda: QGle("dw"),
    "fhn": lambda: Fhn(),
}


def known_models() -> list[str]:
    return list(_FACTORIES)


def get_model(model_id: str) -> HypoModel:
    try:
        return _FACTORIES[model_id]()
    except KeyError:
        raise ModelError(f"unknown model id {model_id!r}; known ids: {', '.join(_FACTORIES)}") from None


__all__ = ["Fhn", "QGle", "UnderdampedLangevin", "get_model", "known_models"]
