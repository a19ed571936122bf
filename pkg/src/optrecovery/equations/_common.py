"""Helpers shared by the equation modules."""

from __future__ import annotations

import numpy as np

from ..domains import QuadratureGrid
from ..errors import InputError
from ..recovery import RecoveryMethod


def sample_weight(source, grid: QuadratureGrid) -> np.ndarray:
    """Values of a majorant on ``grid``.

    ``source`` is a :class:`RecoveryMethod` (its ``phi``), a vectorised
    callable of points ``(N, dim)`` or a constant.
    """
    if isinstance(source, RecoveryMethod):
        out = np.atleast_1d(source.phi(grid.nodes))
    elif callable(source):
        out = np.asarray(source(grid.nodes), dtype=float)
    else:
        out = np.full(grid.size, float(source))
    out = np.broadcast_to(out, (grid.size,)).astype(float)
    if not np.all(np.isfinite(out)):
        raise InputError("majorant has non-finite values on the grid")
    if np.any(out < 0):
        raise InputError("majorants must be nonnegative")
    return out
