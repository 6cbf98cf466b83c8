"""Synthetic marker layouts and contact scenarios with ground truth.

The membrane model is a test oracle, not physics. A press pushes markers
radially away from its centre with magnitude ``gain * depth * exp(-d^2 / 2r^2)``;
the marker sitting exactly on the centre has no radial direction and stays put.
Shear adds its translation vector weighted by the strongest press envelope at
each marker (markers in contact move most), or unweighted when nothing is
pressed. Isotropic Gaussian position noise is added last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ScenarioInfeasibleError
from .geometry import CentroidFrame, median_spacing

#: Radial gain; a depth-3 press of radius 2 pitches on the default layout
#: grows the central cell by roughly 20 %.
DEFAULT_RADIAL_GAIN = 0.1

#: Protocol press radius in units of layout pitch (a broad, flat contact).
PROTOCOL_RADIUS_PITCHES = 2.0

DEPTH_STEPS = np.round(np.arange(51) * 0.1, 10)
SHEAR_STEPS = np.round(np.arange(21) * 0.1, 10)
DIRECTION_ANGLES = np.arange(0, 360, 10)
DIRECTION_DEPTH = 3.0
DIRECTION_SHEAR = 2.0


@dataclass(frozen=True)
class LayoutSpec:
    rings: int = 6
    pitch: float = 3.0
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rings < 1:
            raise ValueError("rings must be >= 1")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")
        if not 0 <= self.jitter < self.pitch / 4:
            raise ValueError("jitter must lie in [0, pitch/4)")


@dataclass(frozen=True)
class Press:
    center: tuple
    depth: float
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.depth < 0:
            raise ValueError("press depth must be >= 0")
        if not self.radius > 0:
            raise ValueError("press radius must be positive")


@dataclass(frozen=True)
class ContactScenario:
    presses: tuple = ()
    shear: tuple = (0.0, 0.0)
    noise_sigma: float = 0.0
    radial_gain: float = DEFAULT_RADIAL_GAIN

    def __post_init__(self):
        object.__setattr__(self, "presses", tuple(self.presses))
        object.__setattr__(self, "shear", tuple(float(s) for s in self.shear))
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class GroundTruth:
    """What the simulator did, in a form the validators can compare against."""

    presses: tuple
    shear: tuple
    shear_magnitude: float
    shear_angle_deg: float | None
    noise_sigma: float

    def to_dict(self):
        return {
            "presses": [
                {"center": list(p.center), "depth": p.depth, "radius": p.radius}
                for p in self.presses
            ],
            "shear": list(self.shear),
            "shear_magnitude": self.shear_magnitude,
            "shear_angle_deg": self.shear_angle_deg,
            "noise_sigma": self.noise_sigma,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            presses=tuple(Press(tuple(p["center"]), p["depth"], p["radius"]) for p in d["presses"]),
            shear=tuple(d["shear"]),
            shear_magnitude=d["shear_magnitude"],
            shear_angle_deg=d["shear_angle_deg"],
            noise_sigma=d["noise_sigma"],
        )

    @property
    def depth(self):
        return max((p.depth for p in self.presses), default=0.0)


def hex_axial(rings):
    """Axial lattice coordinates, centre first, then ring by ring."""
    coords = [(0, 0)]
    steps = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)]
    for k in range(1, rings + 1):
        q, r = k, 0
        for dq, dr in steps:
            for _ in range(k):
                coords.append((q, r))
                q, r = q + dq, r + dr
    return coords


def generate_layout(spec=LayoutSpec()):
    """Hexagonal marker lattice with ``1 + 3 * rings * (rings + 1)`` points."""
    axial = np.array(hex_axial(spec.rings), dtype=float)
    q, r = axial[:, 0], axial[:, 1]
    points = np.column_stack([spec.pitch * (q + r / 2), spec.pitch * (math.sqrt(3) / 2) * r])
    if spec.jitter > 0:
        rng = np.random.default_rng(spec.seed)
        points = points + rng.uniform(-spec.jitter, spec.jitter, size=points.shape)
    return CentroidFrame.from_points(points)


def _envelope(points, press):
    d2 = np.sum((points - np.asarray(press.center)) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * press.radius**2))


def press_displacement(points, press, gain=DEFAULT_RADIAL_GAIN):
    points = np.asarray(points, dtype=float)
    rel = points - np.asarray(press.center)
    d = np.hypot(rel[:, 0], rel[:, 1])
    unit = np.zeros_like(rel)
    nz = d > 0
    unit[nz] = rel[nz] / d[nz, None]
    return (gain * press.depth * _envelope(points, press))[:, None] * unit


def shear_weight(points, presses):
    """In-contact weight of each marker: strongest press envelope, or 1 with no press."""
    if not presses:
        return np.ones(len(points))
    return np.max([_envelope(points, p) for p in presses], axis=0)


def displacement_field(points, scenario):
    """Noise-free marker displacement for ``scenario``."""
    points = np.asarray(points, dtype=float)
    u = np.zeros_like(points)
    for press in scenario.presses:
        u += press_displacement(points, press, scenario.radial_gain)
    if any(scenario.shear):
        u += shear_weight(points, scenario.presses)[:, None] * np.asarray(scenario.shear)
    return u


def ground_truth(scenario):
    shear = np.asarray(scenario.shear, dtype=float)
    magnitude = float(np.hypot(*shear))
    angle = math.degrees(math.atan2(shear[1], shear[0])) % 360.0 if magnitude > 0 else None
    return GroundTruth(
        presses=scenario.presses,
        shear=tuple(float(s) for s in shear),
        shear_magnitude=magnitude,
        shear_angle_deg=angle,
        noise_sigma=scenario.noise_sigma,
    )


def simulate(frame, scenario, seed=0, timestamp=None):
    """Deform ``frame`` under ``scenario``; returns (frame, GroundTruth)."""
    points = frame.points + displacement_field(frame.points, scenario)
    if scenario.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        points = points + rng.normal(0.0, scenario.noise_sigma, size=points.shape)
    pitch = median_spacing(frame.points)
    close = cKDTree(points).query_pairs(1e-6 * pitch, output_type="ndarray")
    if len(close):
        i, j = close[0]
        raise ScenarioInfeasibleError(
            f"markers {int(frame.ids[i])} and {int(frame.ids[j])} collide"
        )
    out = CentroidFrame(points, frame.ids, frame.timestamp if timestamp is None else timestamp)
    return out, ground_truth(scenario)


@dataclass
class ProtocolSample:
    step: int
    scenario: ContactScenario
    frame: CentroidFrame
    truth: GroundTruth


@dataclass
class ProtocolDataset:
    kind: str
    reference: CentroidFrame
    samples: list = field(default_factory=list)

    @property
    def scenarios(self):
        seen = {}
        for s in self.samples:
            seen.setdefault(s.step, s.scenario)
        return [seen[k] for k in sorted(seen)]


def layout_center(frame):
    """Marker nearest the centroid of the layout."""
    mean = frame.points.mean(axis=0)
    k = int(np.argmin(np.sum((frame.points - mean) ** 2, axis=1)))
    return tuple(float(v) for v in frame.points[k])


def protocol_scenarios(kind, frame, noise_sigma=0.0, radial_gain=DEFAULT_RADIAL_GAIN):
    """Scenario list for a named protocol.

    ``depth``: depths 0..5 in 0.1 steps, no shear.
    ``shear``: depth 3, shear 0..2 in 0.1 steps along +x.
    ``direction``: depth 3, shear 2 at 0, 10, ..., 350 degrees.
    """
    center = layout_center(frame)
    radius = PROTOCOL_RADIUS_PITCHES * median_spacing(frame.points)

    def scenario(depth, shear):
        return ContactScenario(
            presses=(Press(center, float(depth), radius),),
            shear=shear,
            noise_sigma=noise_sigma,
            radial_gain=radial_gain,
        )

    if kind == "depth":
        return [scenario(d, (0.0, 0.0)) for d in DEPTH_STEPS]
    if kind == "shear":
        return [scenario(DIRECTION_DEPTH, (float(s), 0.0)) for s in SHEAR_STEPS]
    if kind == "direction":
        out = []
        for a in DIRECTION_ANGLES:
            t = math.radians(a)
            out.append(scenario(DIRECTION_DEPTH, (DIRECTION_SHEAR * math.cos(t), DIRECTION_SHEAR * math.sin(t))))
        return out
    raise ValueError(f"unknown protocol {kind!r}")


def run_protocol(kind, frame, noise_sigma=0.0, seed=0, samples_per_step=None,
                 radial_gain=DEFAULT_RADIAL_GAIN):
    """Simulate a full protocol against the undeformed ``frame``.

    Sweeps record ``samples_per_step`` frames per step (10 by default); the
    direction protocol records one frame per direction. With ``noise_sigma > 0``
    the reference frame is noisy too, and every sample gets independent noise.
    """
    if samples_per_step is None:
        samples_per_step = 1 if kind == "direction" else 10
    rng = np.random.default_rng(seed)
    reference = frame
    if noise_sigma > 0:
        reference = frame.with_points(
            frame.points + rng.normal(0.0, noise_sigma, size=frame.points.shape)
        )
    reference = reference.with_points(reference.points, timestamp=0)
    dataset = ProtocolDataset(kind, reference)
    t = 1
    for step, sc in enumerate(protocol_scenarios(kind, frame, noise_sigma, radial_gain)):
        for _ in range(samples_per_step):
            sub_seed = int(rng.integers(0, 2**63 - 1))
            sim, truth = simulate(frame, sc, seed=sub_seed, timestamp=t)
            dataset.samples.append(ProtocolSample(step, sc, sim, truth))
            t += 1
    return dataset
