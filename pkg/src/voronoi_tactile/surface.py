"""Deformation surface from per-marker area deltas, and contact detection on it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.integrate import trapezoid
from scipy.interpolate import CloughTocher2DInterpolator
from scipy.spatial import Delaunay

from .errors import DegenerateGeometryError, FrameAlignmentError
from .geometry import convex_hull

DEFAULT_RESOLUTION = (64, 64)

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class DeformationSurface:
    """Regular grid of interpolated area deltas.

    ``grid[i, j]`` sits at ``(x_axis[j], y_axis[i])``. Nodes outside the convex
    hull of the markers are masked out and hold NaN.
    """

    grid: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    mask: np.ndarray
    interpolant: object = field(default=None, repr=False)

    @property
    def shape(self):
        return self.grid.shape

    @property
    def spacing(self):
        return float(self.x_axis[1] - self.x_axis[0]), float(self.y_axis[1] - self.y_axis[0])

    def evaluate(self, xy):
        """Interpolant at arbitrary points; NaN outside the marker hull."""
        if self.interpolant is None:
            raise ValueError("surface was built without its interpolant")
        return self.interpolant(np.asarray(xy, dtype=float))

    @property
    def filled(self):
        """Grid with masked-out nodes set to zero."""
        return np.where(self.mask, self.grid, 0.0)


@dataclass(frozen=True)
class Contact:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class ContactSet:
    contacts: tuple
    threshold_used: float

    def __len__(self):
        return len(self.contacts)

    def __iter__(self):
        return iter(self.contacts)


def fit_surface(frame, z_values, resolution=DEFAULT_RESOLUTION):
    """Clough-Tocher interpolation of ``z_values`` at the markers onto a grid.

    The grid spans the markers' bounding box with ``resolution = (nx, ny)``
    nodes. The interpolant is C1, piecewise cubic on the Delaunay triangles,
    passes through every data value and is exact on linear data. Nothing is
    extrapolated beyond the hull.
    """
    points = frame.points if hasattr(frame, "points") else np.asarray(frame, dtype=float)
    z = np.asarray(z_values, dtype=float)
    if z.shape != (len(points),):
        raise FrameAlignmentError(f"{len(z)} z-values for {len(points)} markers")
    nx, ny = resolution
    if nx < 8 or ny < 8:
        raise ValueError(f"resolution must be at least 8x8, got {nx}x{ny}")
    convex_hull(points)  # raises on collinear input

    tri = Delaunay(points)
    interp = CloughTocher2DInterpolator(tri, z, fill_value=np.nan, tol=1e-12, maxiter=2000)
    lo, hi = points.min(axis=0), points.max(axis=0)
    x_axis = np.linspace(lo[0], hi[0], nx)
    y_axis = np.linspace(lo[1], hi[1], ny)
    xx, yy = np.meshgrid(x_axis, y_axis)
    grid = interp(xx, yy)
    mask = np.isfinite(grid)
    if not mask.any():
        raise DegenerateGeometryError("no grid node falls inside the marker hull")
    grid = np.where(mask, grid, np.nan)
    for a in (grid, x_axis, y_axis, mask):
        a.setflags(write=False)
    return DeformationSurface(grid, x_axis, y_axis, mask, interp)


def surface_volume(surface):
    """Signed trapezoidal integral of the surface; masked-out nodes count as zero."""
    return float(trapezoid(trapezoid(surface.filled, surface.x_axis, axis=1), surface.y_axis))


def regional_maxima(surface):
    """Binary mask of 8-connected regional maxima.

    A regional maximum is a connected plateau of equal values whose every
    outside neighbour is strictly lower. Masked-out nodes are neither maxima
    nor neighbours.
    """
    if isinstance(surface, DeformationSurface):
        values, valid = surface.grid, surface.mask
    else:
        values = np.asarray(surface, dtype=float)
        valid = np.isfinite(values)
    n, m = values.shape
    v = np.where(valid, values, -np.inf)
    padded = np.pad(v, 1, constant_values=-np.inf)

    # a node with a strictly higher valid neighbour cannot be a maximum, and
    # neither can anything on its plateau
    beaten = np.zeros((n, m), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                beaten |= padded[1 + di:1 + di + n, 1 + dj:1 + dj + m] > v
    beaten &= valid

    # spread along equal-valued neighbours until nothing changes
    while True:
        b = np.pad(beaten, 1, constant_values=False)
        spread = np.zeros_like(beaten)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    spread |= b[1 + di:1 + di + n, 1 + dj:1 + dj + m] & (
                        padded[1 + di:1 + di + n, 1 + dj:1 + dj + m] == v
                    )
        spread &= valid & ~beaten
        if not spread.any():
            break
        beaten |= spread
    return valid & ~beaten


def detect_contacts(surface, contact_threshold):
    """One contact per regional-maximum plateau at or above ``contact_threshold``.

    The contact sits at the plateau's centroid; if that falls outside the marker
    hull (a curved plateau) the nearest plateau node is used instead.
    """
    if contact_threshold < 0:
        raise ValueError("contact_threshold must be >= 0")
    maxima = regional_maxima(surface)
    labels, count = ndimage.label(maxima, structure=_EIGHT)
    x_axis, y_axis = surface.x_axis, surface.y_axis
    contacts = []
    for k in range(1, count + 1):
        rows, cols = np.nonzero(labels == k)
        z = float(surface.grid[rows[0], cols[0]])
        if z < contact_threshold:
            continue
        cx, cy = x_axis[cols].mean(), y_axis[rows].mean()
        ci = int(round(np.interp(cy, y_axis, np.arange(len(y_axis)))))
        cj = int(round(np.interp(cx, x_axis, np.arange(len(x_axis)))))
        if not surface.mask[ci, cj]:
            nearest = np.argmin((x_axis[cols] - cx) ** 2 + (y_axis[rows] - cy) ** 2)
            cx, cy = x_axis[cols[nearest]], y_axis[rows[nearest]]
        contacts.append(Contact(float(cx), float(cy), z))
    contacts.sort(key=lambda c: (-c.z, c.x, c.y))
    return ContactSet(tuple(contacts), float(contact_threshold))
