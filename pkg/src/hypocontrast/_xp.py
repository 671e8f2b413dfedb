"""Pick numpy or jax.numpy from the arguments."""
from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np


def namespace(*arrays):
    for a in arrays:
        if isinstance(a, jax.Array):
            return jnp
        if isinstance(a, (tuple, list)) and a and namespace(*a) is jnp:
            return jnp
    return np
