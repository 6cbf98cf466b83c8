"""Static SVG rendering of a tessellated frame.

Cells are shaded red where they grew (compression) and blue where they shrank
(expansion). Local shears are drawn as thin red segments, the global shear as a
black arrow from the layout centre, and each contact as a blue star.

World coordinates map to the canvas by a fixed affine transform::

    u = margin + (x - x_min) * scale
    v = margin + (y_max - y) * scale

with ``scale`` chosen so the cell bounding box fills the canvas inside the
margin. The transform is written into the document's ``data-transform``
attribute so that consumers can map back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FrameAlignmentError

WHITE = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class RenderSpec:
    color_scale_max: float = 30.0
    show_local_shears: bool = True
    show_global_shear: bool = True
    show_contacts: bool = True
    width: float = 600.0
    height: float = 600.0
    margin: float = 20.0
    local_vector_gain: float = 1.0
    global_arrow_gain: float = 10.0

    def __post_init__(self):
        if not self.color_scale_max > 0:
            raise ValueError("color_scale_max must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("canvas must be positive")
        if not 0 <= 2 * self.margin < min(self.width, self.height):
            raise ValueError("margin leaves no drawing area")


def color_map(delta_percent, color_scale_max=30.0):
    """RGB triple in [0, 1]: white at zero, red for growth, blue for shrinkage."""
    t = min(abs(float(delta_percent)) / color_scale_max, 1.0)
    fade = 1.0 - t
    if delta_percent > 0:
        return (1.0, fade, fade)
    if delta_percent < 0:
        return (fade, fade, 1.0)
    return WHITE


def _hex(rgb):
    return "#" + "".join(f"{int(round(c * 255)):02x}" for c in rgb)


def _num(v):
    s = f"{v:.7f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


@dataclass(frozen=True)
class CanvasTransform:
    scale: float
    x_min: float
    y_max: float
    margin: float

    def __call__(self, xy):
        xy = np.asarray(xy, dtype=float)
        u = self.margin + (xy[..., 0] - self.x_min) * self.scale
        v = self.margin + (self.y_max - xy[..., 1]) * self.scale
        return np.stack([u, v], axis=-1)


def canvas_transform(cells, spec):
    verts = np.vstack(cells.cells)
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = min((spec.width - 2 * spec.margin) / span[0], (spec.height - 2 * spec.margin) / span[1])
    return CanvasTransform(float(scale), float(lo[0]), float(hi[1]), float(spec.margin))


def _star(cx, cy, r_out, r_in, points=5):
    pts = []
    for k in range(2 * points):
        r = r_out if k % 2 == 0 else r_in
        a = -math.pi / 2 + k * math.pi / points
        pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    return pts


def _points_attr(pts):
    return " ".join(f"{_num(u)},{_num(v)}" for u, v in pts)


def render_frame(cells, deltas, shear=None, contacts=None, spec=RenderSpec()):
    """SVG document for one frame; identical inputs give identical bytes."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.shape != (len(cells),):
        raise FrameAlignmentError(f"{len(deltas)} deltas for {len(cells)} cells")
    if shear is not None and len(shear.locals) != len(cells):
        raise FrameAlignmentError(f"{len(shear.locals)} shear vectors for {len(cells)} cells")
    tf = canvas_transform(cells, spec)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(spec.width)}" '
        f'height="{_num(spec.height)}" viewBox="0 0 {_num(spec.width)} {_num(spec.height)}" '
        f'data-transform="scale={tf.scale!r};x_min={tf.x_min!r};y_max={tf.y_max!r};margin={tf.margin!r}">',
        f'<rect x="0" y="0" width="{_num(spec.width)}" height="{_num(spec.height)}" fill="#ffffff"/>',
        '<g id="cells" stroke="#404040" stroke-width="0.5">',
    ]
    for poly, marker, d in zip(cells.cells, cells.owner_ids, deltas):
        fill = _hex(color_map(d, spec.color_scale_max))
        out.append(
            f'<polygon data-id="{int(marker)}" fill="{fill}" points="{_points_attr(tf(poly))}"/>'
        )
    out.append("</g>")

    if spec.show_local_shears and shear is not None:
        out.append('<g id="local-shear" stroke="#d00000" stroke-width="1">')
        start = tf(cells.sites)
        end = tf(cells.sites + spec.local_vector_gain * np.asarray(shear.locals))
        for (u0, v0), (u1, v1) in zip(start, end):
            out.append(f'<line x1="{_num(u0)}" y1="{_num(v0)}" x2="{_num(u1)}" y2="{_num(v1)}"/>')
        out.append("</g>")

    if spec.show_global_shear and shear is not None and shear.direction_defined:
        origin = np.asarray(cells.sites).mean(axis=0)
        tip = origin + spec.global_arrow_gain * np.asarray(shear.global_vector)
        (u0, v0), (u1, v1) = tf(origin), tf(tip)
        out.append(
            '<defs><marker id="arrowhead" markerWidth="10" markerHeight="7" refX="10" refY="3.5" '
            'orient="auto"><polygon points="0,0 10,3.5 0,7" fill="#000000"/></marker></defs>'
        )
        out.append(
            f'<line id="global-shear" x1="{_num(u0)}" y1="{_num(v0)}" x2="{_num(u1)}" y2="{_num(v1)}" '
            f'stroke="#000000" stroke-width="2.5" marker-end="url(#arrowhead)"/>'
        )

    if spec.show_contacts and contacts is not None and len(contacts):
        out.append('<g id="contacts" fill="#0030ff" stroke="#ffffff" stroke-width="0.8">')
        r = 0.02 * min(spec.width, spec.height)
        for c in contacts:
            u, v = tf([c.x, c.y])
            out.append(
                f'<polygon data-x="{c.x!r}" data-y="{c.y!r}" data-z="{c.z!r}" '
                f'points="{_points_attr(_star(u, v, r, 0.45 * r))}"/>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
