"""Bounded Voronoi tessellation of marker centroids.

Outer markers of a raw Voronoi diagram own unbounded cells. To give every real
marker a finite cell, the convex hull of the markers is dilated outward and a
ring of artificial sites is laid along it, denser than the markers themselves.
The cells of real markers are then closed by their artificial neighbours, and
artificial cells are never materialised.

Cells are built as the dual of a Delaunay triangulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import (
    ContainmentError,
    DegenerateGeometryError,
    DuplicateSiteError,
    FrameAlignmentError,
)

#: Sites closer than this fraction of the frame diameter are duplicates.
DUPLICATE_TOLERANCE = 1e-9


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CentroidFrame:
    """One time-sample of 2D marker centroids with stable marker ids."""

    points: np.ndarray
    ids: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (N, 2), got {pts.shape}")
        if len(pts) < 3:
            raise DegenerateGeometryError(f"need at least 3 centroids, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("centroid coordinates must be finite")
        ids = np.asarray(self.ids)
        if ids.shape != (len(pts),):
            raise FrameAlignmentError("ids must align one-to-one with points")
        if not np.issubdtype(ids.dtype, np.integer):
            raise ValueError("marker ids must be integers")
        if len(np.unique(ids)) != len(ids):
            raise FrameAlignmentError("marker ids must be unique")
        check_duplicates(pts)
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "ids", _readonly(ids.astype(np.int64)))

    @classmethod
    def from_points(cls, points, ids=None, timestamp=0):
        points = np.asarray(points, dtype=float)
        if ids is None:
            ids = np.arange(len(points))
        return cls(points, np.asarray(ids), timestamp)

    def __len__(self):
        return len(self.points)

    def with_points(self, points, timestamp=None):
        """Same markers at new positions."""
        return CentroidFrame(
            points, self.ids, self.timestamp if timestamp is None else timestamp
        )

    def require_aligned(self, other):
        if not np.array_equal(self.ids, other.ids):
            raise FrameAlignmentError(
                f"frames {self.timestamp} and {other.timestamp} carry different marker ids"
            )


def check_duplicates(points):
    pts = np.asarray(points, dtype=float)
    diameter = np.ptp(pts, axis=0).max() if len(pts) else 0.0
    tol = DUPLICATE_TOLERANCE * max(diameter, np.finfo(float).tiny)
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    if len(pairs) or diameter == 0.0:
        i, j = (pairs[0] if len(pairs) else (0, 1))
        raise DuplicateSiteError(f"sites {i} and {j} coincide at {tuple(pts[i])}")


def median_spacing(points):
    """Median nearest-neighbour distance."""
    dist, _ = cKDTree(points).query(points, k=2)
    return float(np.median(dist[:, 1]))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """Counter-clockwise hull vertices (Andrew's monotone chain), collinear points dropped."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) < 3:
        raise DegenerateGeometryError("fewer than 3 distinct points")

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower, upper = half(pts), half(reversed(pts))
    hull = np.array(lower[:-1] + upper[:-1])
    diameter = np.ptp(hull, axis=0).max()
    if len(hull) < 3 or polygon_area(hull) <= 1e-12 * diameter**2:
        raise DegenerateGeometryError("points are collinear")
    return hull


def polygon_area(vertices):
    """Signed shoelace area; positive for counter-clockwise vertex order."""
    v = np.asarray(vertices, dtype=float)
    v = v - v.mean(axis=0)  # keeps precision far from the origin
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def points_in_convex_polygon(points, polygon, strict=True):
    """Vectorised inside test against a counter-clockwise convex polygon."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    edge = b - a
    rel = pts[:, None, :] - a[None, :, :]
    cross = edge[None, :, 0] * rel[:, :, 1] - edge[None, :, 1] * rel[:, :, 0]
    return np.all(cross > 0, axis=1) if strict else np.all(cross >= 0, axis=1)


@dataclass(frozen=True, eq=False)
class BoundaryRing:
    """Enclosing polygon plus the artificial sites laid along its perimeter."""

    polygon: np.ndarray
    artificial_points: np.ndarray
    offset: float
    spacing: float

    def __post_init__(self):
        object.__setattr__(self, "polygon", _readonly(self.polygon))
        object.__setattr__(self, "artificial_points", _readonly(self.artificial_points))

    def contains(self, points):
        return points_in_convex_polygon(points, self.polygon, strict=True)

    def translated(self, vector):
        v = np.asarray(vector, dtype=float)
        return BoundaryRing(
            self.polygon + v, self.artificial_points + v, self.offset, self.spacing
        )


def dilate_convex(hull, offset):
    """Mitred outward offset of a counter-clockwise convex polygon."""
    a = hull
    b = np.roll(hull, -1, axis=0)
    edge = b - a
    length = np.hypot(edge[:, 0], edge[:, 1])
    normal = np.column_stack([edge[:, 1], -edge[:, 0]]) / length[:, None]
    c = np.einsum("ij,ij->i", normal, a) + offset
    # vertex i is the meet of offset edges i-1 and i
    n0, n1 = np.roll(normal, 1, axis=0), normal
    c0, c1 = np.roll(c, 1), c
    det = n0[:, 0] * n1[:, 1] - n0[:, 1] * n1[:, 0]
    x = (c0 * n1[:, 1] - c1 * n0[:, 1]) / det
    y = (n0[:, 0] * c1 - n1[:, 0] * c0) / det
    return np.column_stack([x, y])


def build_boundary(frame, offset=None, spacing_ratio=0.5):
    """Dilate the hull of ``frame`` by ``offset`` and seed artificial sites along it.

    ``offset`` defaults to half the median nearest-neighbour spacing. Artificial
    sites are spaced at most ``spacing_ratio`` times that spacing along the
    perimeter, and every polygon vertex carries one.
    """
    points = frame.points if isinstance(frame, CentroidFrame) else np.asarray(frame, float)
    hull = convex_hull(points)
    nn = median_spacing(points)
    if offset is None:
        offset = 0.5 * nn
    if not offset > 0:
        raise ValueError(f"boundary offset must be positive, got {offset}")
    if not 0 < spacing_ratio < 1:
        raise ValueError(f"spacing_ratio must lie in (0, 1), got {spacing_ratio}")
    polygon = dilate_convex(hull, offset)
    target = spacing_ratio * nn

    artificial = []
    for a, b in zip(polygon, np.roll(polygon, -1, axis=0)):
        n = max(1, int(np.ceil(np.hypot(*(b - a)) / target)))
        t = np.arange(n)[:, None] / n
        artificial.append(a + t * (b - a))
    return BoundaryRing(polygon, np.vstack(artificial), float(offset), float(target))


@dataclass(frozen=True, eq=False)
class CellSet:
    """One convex, counter-clockwise cell polygon per real marker."""

    cells: tuple
    areas: np.ndarray
    owner_ids: np.ndarray
    sites: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.cells)


def _clip(poly, point, normal, tol):
    """Keep the part of ``poly`` where (x - point) . normal <= 0."""
    side = (poly - point) @ normal
    inside = side <= tol
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        p, q = poly[i], poly[j]
        sp, sq = side[i], side[j]
        if inside[i]:
            out.append(p)
        if (sp <= tol) != (sq <= tol):
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return np.array(out)


def _dedupe(poly, tol):
    if len(poly) == 0:
        return poly
    keep = np.hypot(*(poly - np.roll(poly, 1, axis=0)).T) > tol
    if not keep.any():
        return poly[:1]
    return poly[keep]


def _circumcenters(points, simplices):
    a = points[simplices[:, 0]]
    b = points[simplices[:, 1]] - a
    c = points[simplices[:, 2]] - a
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    b2 = np.sum(b * b, axis=1)
    c2 = np.sum(c * c, axis=1)
    # flat triangles between collinear boundary sites have no finite centre
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (c[:, 1] * b2 - b[:, 1] * c2) / d
        uy = (b[:, 0] * c2 - c[:, 0] * b2) / d
    return a + np.column_stack([ux, uy])


def _clipped_cell(i, sites, neighbours, boundary, tol):
    """Cell of site ``i`` as bisector half-planes intersected with the boundary polygon."""
    p = sites[i]
    poly = np.asarray(boundary.polygon, dtype=float)
    for j in neighbours:
        q = sites[j]
        poly = _clip(poly, 0.5 * (p + q), q - p, tol * np.hypot(*(q - p)))
    return poly


def tessellate(frame, boundary):
    """Bounded Voronoi cells of the real markers of ``frame``.

    The Voronoi diagram of markers plus artificial boundary sites is taken as the
    dual of their Delaunay triangulation: a real cell's vertices are the
    circumcentres of the triangles around it, in angular order. ``frame`` may
    also be a bare ``(N, 2)`` array, which allows single-site cells. Artificial
    cells, which carry the long outer edges, are never built. A real site that
    still ends up on the hull of all sites (a hand-made boundary without sites
    at its corners), or that touches a flat triangle, gets its cell from
    bisector half-planes clipped to the boundary polygon instead.
    """
    if isinstance(frame, CentroidFrame):
        real, ids = frame.points, frame.ids
    else:
        real = np.atleast_2d(np.asarray(frame, dtype=float))
        ids = np.arange(len(real))
    outside = ~boundary.contains(real)
    if outside.any():
        k = int(np.flatnonzero(outside)[0])
        raise ContainmentError(
            f"marker {int(ids[k])} at {tuple(real[k])} is not inside the boundary"
        )
    sites = np.vstack([real, boundary.artificial_points])
    check_duplicates(sites)
    n_real = len(real)

    tri = Delaunay(sites)
    centers = _circumcenters(sites, tri.simplices)
    span = float(np.ptp(sites, axis=0).max())
    tol = 1e-12 * span
    on_hull = np.zeros(len(sites), dtype=bool)
    on_hull[np.unique(tri.convex_hull)] = True

    flat = tri.simplices.ravel()
    order = np.argsort(flat, kind="stable")
    owners = flat[order]
    simplex_of = order // 3
    bounds = np.searchsorted(owners, np.arange(n_real + 1))
    indptr, indices = tri.vertex_neighbor_vertices

    cells = []
    for i in range(n_real):
        p = real[i]
        fan = centers[simplex_of[bounds[i]:bounds[i + 1]]]
        if on_hull[i] or not np.isfinite(fan).all():
            poly = _clipped_cell(i, sites, indices[indptr[i]:indptr[i + 1]], boundary, tol)
        else:
            angle = np.arctan2(fan[:, 1] - p[1], fan[:, 0] - p[0])
            poly = fan[np.argsort(angle, kind="stable")]
        poly = _dedupe(poly, tol)
        if len(poly) < 3:
            raise DegenerateGeometryError(f"cell of marker {int(ids[i])} collapsed")
        cells.append(_readonly(poly))

    areas = np.array([polygon_area(c) for c in cells])
    return CellSet(tuple(cells), _readonly(areas), _readonly(ids), _readonly(real))


def cell_areas(cells):
    """Shoelace area per cell, ordered like ``cells.owner_ids``."""
    return np.array([polygon_area(c) for c in cells.cells])


def area_deltas(reference, current):
    """Percent change of each cell's area relative to the reference cell."""
    if not np.array_equal(reference.owner_ids, current.owner_ids):
        raise FrameAlignmentError("cell sets carry different marker ids")
    ref = np.asarray(reference.areas)
    cur = np.asarray(current.areas)
    return 100.0 * (cur - ref) / ref
