import math

import numpy as np
import pytest

from voronoi_tactile.calibration import fit_calibration
from voronoi_tactile.errors import FrameAlignmentError, TactileError, UnitMismatchError
from voronoi_tactile.formats import recording_from_dataset
from voronoi_tactile.geometry import CentroidFrame
from voronoi_tactile.pipeline import (
    PipelineConfig,
    TactilePipeline,
    ValidationConfig,
    calibrate_recording,
    calibration_pairs,
    calibration_press_threshold,
    configs_from_mapping,
    infer_recording,
    process_frame,
    validate_features,
)
from voronoi_tactile.shear import angular_difference
from voronoi_tactile.simulator import ContactScenario, Press, layout_center, run_protocol, simulate


@pytest.fixture(scope="module")
def pipe(layout):
    return TactilePipeline(layout)


def test_reference_against_itself(pipe, layout):
    rec = pipe.process(layout)
    assert rec.volume == 0.0
    assert rec.contacts == []
    assert rec.shear_magnitude == 0.0
    assert rec.shear_direction_deg is None
    assert rec.flags["direction_undefined"]
    assert rec.volume_mm is None and rec.shear_magnitude_mm is None


def test_press_and_shear_record(pipe, layout):
    center = layout_center(layout)
    theta = 130.0
    shear = (2 * math.cos(math.radians(theta)), 2 * math.sin(math.radians(theta)))
    frame, truth = simulate(layout, ContactScenario(presses=(Press(center, 3.0, 6.0),), shear=shear),
                            timestamp=4)
    rec = pipe.process(frame)
    assert rec.index == 4
    assert angular_difference(rec.shear_direction_deg, theta) < 0.5
    assert len(rec.contacts) == 1
    x, y, _ = rec.contacts[0]
    assert math.hypot(x - center[0], y - center[1]) <= max(rec.grid_spacing)
    assert rec.volume > 0


def test_process_frame_matches_pipeline(pipe, layout):
    frame, _ = simulate(layout, ContactScenario(presses=(Press(layout.points[2], 2.0, 6.0),)))
    assert process_frame(layout, frame).to_dict() == pipe.process(frame).to_dict()


def test_default_threshold_is_a_quarter_of_unit_press(layout):
    t = calibration_press_threshold(layout)
    assert t > 0
    assert calibration_press_threshold(layout, PipelineConfig(threshold_fraction=0.5)) == pytest.approx(2 * t)
    assert TactilePipeline(layout, PipelineConfig(contact_threshold=3.0)).contact_threshold == 3.0


def test_errors_carry_frame_index(pipe, layout):
    other = CentroidFrame(layout.points, layout.ids + 1000, timestamp=5)
    with pytest.raises(FrameAlignmentError, match="frame 5") as info:
        pipe.process(other)
    assert info.value.frame_index == 5


def test_table_kind_and_units_are_checked(layout):
    depth = fit_calibration([(0, 0), (1, 1)], "depth")
    with pytest.raises(UnitMismatchError):
        TactilePipeline(layout, shear_table=depth)
    with pytest.raises(UnitMismatchError):
        TactilePipeline(layout, depth_table=depth, units="pixel")


def test_calibrated_fields_and_out_of_range_flag(layout):
    depth = fit_calibration([(-1.0, 0.0), (1e6, 5.0)], "depth")
    shear = fit_calibration([(0.5, 0.0), (10.0, 2.0)], "shear")
    pipe = TactilePipeline(layout, depth_table=depth, shear_table=shear)
    frame, _ = simulate(layout, ContactScenario(presses=(Press(layout.points[0], 3.0, 6.0),)))
    rec = pipe.process(frame)
    assert rec.volume_mm is not None
    assert rec.shear_magnitude_mm is None  # magnitude ~0 is below the shear table
    assert rec.flags["calibration_out_of_range"]


def test_configs_from_mapping():
    pipe, val = configs_from_mapping(
        {"tactile": {"version": "1", "grid_nx": "32", "contact_threshold": "auto"},
         "validate": {"max_mean_angular_error_deg": "1.5"}},
        {"grid_ny": 40},
    )
    assert pipe.resolution == (32, 40) and pipe.contact_threshold is None
    assert val.max_mean_angular_error_deg == 1.5
    with pytest.raises(ValueError):
        configs_from_mapping({"tactile": {"grid_mx": "3"}})


def test_calibration_pairs_average_per_step(layout):
    ds = run_protocol("depth", layout, noise_sigma=0.02, samples_per_step=3)
    rec = recording_from_dataset(ds)
    _, records = infer_recording(rec)
    pairs = calibration_pairs(rec, records, "depth")
    assert len(pairs) == 51
    by_index = {r.index: r for r in records}
    first = [by_index[i].volume for i in (1, 2, 3)]
    assert pairs[0] == (pytest.approx(np.mean(first)), 0.0)
    assert [m for _, m in pairs] == pytest.approx(np.arange(51) * 0.1)


def test_validation_checks_direction_protocol(layout):
    rec = recording_from_dataset(run_protocol("direction", layout))
    _, records = infer_recording(rec)
    checks = {c.name: c for c in validate_features(rec, records)}
    assert set(checks) == {"mean_abs_angular_error_deg", "contact_hit_rate"}
    assert all(c.passed for c in checks.values())
    strict = validate_features(rec, records, ValidationConfig(max_mean_angular_error_deg=0.0))
    assert not strict[0].passed
    assert strict[0].line().startswith("FAIL")


def test_validation_requires_records(layout):
    rec = recording_from_dataset(run_protocol("direction", layout))
    with pytest.raises(TactileError, match="no feature record"):
        validate_features(rec, [])


def test_noiseless_shear_calibration_is_linear_between_knots(layout):
    rec = recording_from_dataset(run_protocol("shear", layout, samples_per_step=1))
    table = calibrate_recording(rec, "shear")
    pipe = TactilePipeline(layout, shear_table=table)
    center = layout_center(layout)
    radius = 2 * 3.0
    for s in np.arange(0.05, 2.0, 0.1):
        frame, _ = simulate(layout, ContactScenario(presses=(Press(center, 3.0, radius),), shear=(s, 0.0)))
        assert pipe.process(frame).shear_magnitude_mm == pytest.approx(s, rel=1e-6)
