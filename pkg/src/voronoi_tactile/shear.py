"""Local and global shear from centroid motion since the reference frame."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFieldError

#: Below this magnitude (length units) the shear direction is reported as undefined.
DIRECTION_EPSILON = 1e-6


@dataclass(frozen=True, eq=False)
class ShearField:
    locals: np.ndarray
    global_vector: tuple
    magnitude: float
    direction_deg: float | None

    @property
    def direction_defined(self):
        return self.direction_deg is not None


def local_shears(reference, current):
    """Per-marker displacement ``current - reference``, aligned on marker id."""
    reference.require_aligned(current)
    return np.asarray(current.points) - np.asarray(reference.points)


def global_shear(locals, epsilon=DIRECTION_EPSILON):
    """Arithmetic mean of the local vectors, with its norm and heading.

    Heading is in degrees counter-clockwise from +x, in [0, 360), and ``None``
    when the magnitude is below ``epsilon``.
    """
    v = np.asarray(locals, dtype=float).reshape(-1, 2)
    if len(v) == 0:
        raise EmptyFieldError("no local shear vectors")
    g = v.mean(axis=0)
    magnitude = float(math.hypot(g[0], g[1]))
    direction = None
    if magnitude >= epsilon:
        direction = math.degrees(math.atan2(g[1], g[0])) % 360.0
        if direction >= 360.0:
            direction = 0.0
    locals_ro = v.copy()
    locals_ro.setflags(write=False)
    return ShearField(locals_ro, (float(g[0]), float(g[1])), magnitude, direction)


def regional_shear(locals, ids, subset, epsilon=DIRECTION_EPSILON):
    """Global shear restricted to the markers whose id is in ``subset``."""
    ids = np.asarray(ids)
    pick = np.isin(ids, np.asarray(list(subset)))
    return global_shear(np.asarray(locals)[pick], epsilon)


def angular_difference(a, b):
    """Smallest absolute difference between two headings in degrees."""
    d = (a - b) % 360.0
    return min(d, 360.0 - d)
