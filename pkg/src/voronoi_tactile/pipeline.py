"""End-to-end per-frame feature extraction and its validation against ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import stats

from .calibration import apply_calibration, fit_calibration
from .errors import OutOfRangeError, TactileError, UnitMismatchError
from .formats import FeatureRecord
from .geometry import area_deltas, build_boundary, median_spacing, tessellate
from .shear import angular_difference, global_shear, local_shears
from .simulator import PROTOCOL_RADIUS_PITCHES, ContactScenario, Press, layout_center, simulate
from .surface import DEFAULT_RESOLUTION, detect_contacts, fit_surface, surface_volume


@dataclass(frozen=True)
class PipelineConfig:
    grid_nx: int = DEFAULT_RESOLUTION[0]
    grid_ny: int = DEFAULT_RESOLUTION[1]
    #: ``None`` derives the threshold from a depth-1 calibration press.
    contact_threshold: float | None = None
    threshold_fraction: float = 0.25
    boundary_offset_ratio: float = 0.5
    artificial_spacing_ratio: float = 0.5
    shear_epsilon: float = 1e-6

    @property
    def resolution(self):
        return (self.grid_nx, self.grid_ny)


@dataclass(frozen=True)
class ValidationConfig:
    max_mean_angular_error_deg: float = 2.3
    min_depth_spearman: float = 0.99
    min_shear_r2: float = 0.99
    #: Contacts are only checked on records pressed at least this deep.
    min_contact_depth: float = 2.0
    #: Contact location tolerance, in grid spacings.
    contact_tolerance_steps: float = 1.0
    min_contact_hit_rate: float = 1.0


def _coerce(cls, values):
    out = {}
    types = {f.name: f.type for f in fields(cls)}
    for key, raw in values.items():
        if key == "version":
            continue
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(raw, str):
            raw = raw.strip()
            if key == "contact_threshold" and raw.lower() in ("auto", "none", ""):
                raw = None
            elif "int" in str(types[key]):
                raw = int(raw)
            else:
                raw = float(raw)
        out[key] = raw
    return out


def configs_from_mapping(mapping, overrides=None):
    """Build (PipelineConfig, ValidationConfig) from parsed config sections."""
    mapping = mapping or {}
    pipe = PipelineConfig(**_coerce(PipelineConfig, mapping.get("tactile", {})))
    val = ValidationConfig(**_coerce(ValidationConfig, mapping.get("validate", {})))
    if overrides:
        pipe = replace(pipe, **{k: v for k, v in overrides.items() if v is not None})
    return pipe, val


def calibration_press_threshold(reference, config=PipelineConfig(), boundary=None):
    """Contact threshold from a simulated depth-1 press at the layout centre.

    The press uses the protocol radius; the threshold is
    ``config.threshold_fraction`` of the largest resulting area delta.
    """
    if boundary is None:
        boundary = _boundary(reference, config)
    radius = PROTOCOL_RADIUS_PITCHES * median_spacing(reference.points)
    scenario = ContactScenario(presses=(Press(layout_center(reference), 1.0, radius),))
    pressed, _ = simulate(reference, scenario)
    deltas = area_deltas(tessellate(reference, boundary), tessellate(pressed, boundary))
    return config.threshold_fraction * float(deltas.max())


def _boundary(reference, config):
    nn = median_spacing(reference.points)
    return build_boundary(
        reference,
        offset=config.boundary_offset_ratio * nn,
        spacing_ratio=config.artificial_spacing_ratio,
    )


class TactilePipeline:
    """Feature extraction against a fixed reference frame.

    The boundary ring and reference tessellation are built once from the
    reference frame and reused for every later frame, so cell-area changes are
    never confounded by a moving boundary.
    """

    def __init__(self, reference, config=PipelineConfig(), depth_table=None, shear_table=None,
                 units=None):
        for table, kind in ((depth_table, "depth"), (shear_table, "shear")):
            if table is None:
                continue
            if table.kind != kind:
                raise UnitMismatchError(f"expected a {kind} table, got kind {table.kind!r}")
            if units is not None and table.units != units:
                raise UnitMismatchError(
                    f"{kind} table is in {table.units!r}, recording is in {units!r}"
                )
        self.reference = reference
        self.config = config
        self.depth_table = depth_table
        self.shear_table = shear_table
        self.boundary = _boundary(reference, config)
        self.reference_cells = tessellate(reference, self.boundary)
        if config.contact_threshold is None:
            self.contact_threshold = calibration_press_threshold(reference, config, self.boundary)
        else:
            self.contact_threshold = float(config.contact_threshold)

    def analyse(self, current):
        """All intermediate products for ``current``: cells, deltas, surface, contacts, shear."""
        self.reference.require_aligned(current)
        cells = tessellate(current, self.boundary)
        deltas = area_deltas(self.reference_cells, cells)
        surface = fit_surface(current, deltas, self.config.resolution)
        contacts = detect_contacts(surface, self.contact_threshold)
        shear = global_shear(local_shears(self.reference, current), self.config.shear_epsilon)
        return cells, deltas, surface, contacts, shear

    def process(self, current, index=None):
        index = current.timestamp if index is None else index
        try:
            _, deltas, surface, contacts, shear = self.analyse(current)
        except TactileError as exc:
            exc.frame_index = index
            exc.args = (f"frame {index}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        volume = surface_volume(surface)
        out_of_range = False
        volume_mm = shear_mm = None
        if self.depth_table is not None:
            try:
                volume_mm = apply_calibration(self.depth_table, volume)
            except OutOfRangeError:
                out_of_range = True
        if self.shear_table is not None:
            try:
                shear_mm = apply_calibration(self.shear_table, shear.magnitude)
            except OutOfRangeError:
                out_of_range = True
        return FeatureRecord(
            index=int(index),
            area_deltas=[float(d) for d in deltas],
            volume=volume,
            contacts=[(c.x, c.y, c.z) for c in contacts],
            shear_vector=shear.global_vector,
            shear_magnitude=shear.magnitude,
            shear_direction_deg=shear.direction_deg,
            grid_spacing=surface.spacing,
            volume_mm=volume_mm,
            shear_magnitude_mm=shear_mm,
            flags={
                "direction_undefined": not shear.direction_defined,
                "calibration_out_of_range": out_of_range,
            },
        )

    def run(self, frames):
        return [self.process(f) for f in frames]


def process_frame(reference, current, config=PipelineConfig(), depth_table=None, shear_table=None):
    return TactilePipeline(reference, config, depth_table, shear_table).process(current)


def infer_recording(recording, config=PipelineConfig(), depth_table=None, shear_table=None):
    pipe = TactilePipeline(recording.reference, config, depth_table, shear_table, recording.units)
    return pipe, pipe.run(recording.frames)


# --------------------------------------------------------------------------
# Calibration from protocol recordings
# --------------------------------------------------------------------------


def calibration_pairs(recording, records, kind):
    """Per-step (mean raw, mechanical) pairs, in step order."""
    by_index = {r.index: r for r in records}
    steps = {}
    for index, (step, truth) in sorted(recording.truth.items()):
        rec = by_index[index]
        if kind == "depth":
            raw, mech = rec.volume, truth.depth
        else:
            raw, mech = rec.shear_magnitude, truth.shear_magnitude
        steps.setdefault(step, (mech, []))[1].append(raw)
    return [(float(np.mean(raws)), float(mech)) for _, (mech, raws) in sorted(steps.items())]


def calibrate_recording(recording, kind, config=PipelineConfig()):
    _, records = infer_recording(recording, config)
    pairs = calibration_pairs(recording, records, kind)
    return fit_calibration(pairs, kind, recording.units)


# --------------------------------------------------------------------------
# Validation against ground truth
# --------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} = {self.value:.6g} (tolerance {self.tolerance:g}) {self.detail}".rstrip()


def validate_features(recording, records, config=ValidationConfig()):
    """Compare feature records with the recording's ground truth.

    Returns a list of :class:`Check`; a quantity only gets a check when the
    recording exercises it (shear headings, a depth sweep, a shear sweep, or
    presses deep enough to require contacts).
    """
    by_index = {r.index: r for r in records}
    missing = sorted(set(recording.truth) - set(by_index))
    if missing:
        raise TactileError(f"no feature record for truth frames {missing[:5]}")
    items = [(by_index[i], step, t) for i, (step, t) in sorted(recording.truth.items())]
    checks = []

    headed = [(r, t) for r, step, t in items if t.shear_angle_deg is not None]
    if headed:
        errors = [
            180.0 if r.shear_direction_deg is None
            else angular_difference(r.shear_direction_deg, t.shear_angle_deg)
            for r, t in headed
        ]
        mean_err = float(np.mean(errors))
        checks.append(Check(
            "mean_abs_angular_error_deg", mean_err, config.max_mean_angular_error_deg,
            mean_err <= config.max_mean_angular_error_deg,
            f"(max {max(errors):.4g} over {len(errors)} records)",
        ))

    depths = np.array([t.depth for _, _, t in items])
    shears = np.array([t.shear_magnitude for _, _, t in items])
    if len(np.unique(depths)) >= 3 and len(np.unique(shears)) == 1:
        vols = np.array([r.volume for r, _, _ in items])
        rho = float(stats.spearmanr(vols, depths).statistic)
        pearson = float(np.corrcoef(vols, depths)[0, 1])
        checks.append(Check(
            "volume_depth_spearman", rho, config.min_depth_spearman,
            rho >= config.min_depth_spearman, f"(pearson {pearson:.4f})",
        ))
    if len(np.unique(shears)) >= 3:
        mags = np.array([r.shear_magnitude for r, _, _ in items])
        r2 = float(stats.linregress(shears, mags).rvalue ** 2)
        checks.append(Check(
            "shear_magnitude_r2", r2, config.min_shear_r2, r2 >= config.min_shear_r2,
        ))

    pressed = [(r, t) for r, _, t in items if t.presses and t.depth >= config.min_contact_depth]
    if pressed:
        hits, worst = 0, 0.0
        for r, t in pressed:
            tol = config.contact_tolerance_steps * max(r.grid_spacing)
            ok = len(r.contacts) == len(t.presses)
            for p in t.presses:
                d = min((math.hypot(c[0] - p.center[0], c[1] - p.center[1]) for c in r.contacts),
                        default=math.inf)
                worst = max(worst, d)
                ok = ok and d <= tol
            hits += ok
        rate = hits / len(pressed)
        checks.append(Check(
            "contact_hit_rate", rate, config.min_contact_hit_rate,
            rate >= config.min_contact_hit_rate,
            f"(worst location error {worst:.4g} over {len(pressed)} records)",
        ))
    return checks
