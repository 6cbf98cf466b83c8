import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voronoi_tactile.errors import EmptyFieldError, FrameAlignmentError
from voronoi_tactile.geometry import CentroidFrame
from voronoi_tactile.shear import (
    angular_difference,
    global_shear,
    local_shears,
    regional_shear,
)
from voronoi_tactile.simulator import ContactScenario, Press, layout_center, simulate


def test_identical_frames_have_zero_locals(layout):
    assert np.all(local_shears(layout, layout) == 0.0)


def test_translation_gives_uniform_locals(layout):
    moved = layout.with_points(layout.points + [1.0, 0.0])
    np.testing.assert_allclose(local_shears(layout, moved), [[1.0, 0.0]] * len(layout), atol=1e-12)


def test_locals_need_matching_ids(layout):
    other = CentroidFrame(layout.points, layout.ids + 1)
    with pytest.raises(FrameAlignmentError):
        local_shears(layout, other)


def test_press_locals_point_outward(layout):
    center = np.array(layout_center(layout))
    pressed, _ = simulate(layout, ContactScenario(presses=(Press(center, 3.0, 6.0),)))
    locals_ = local_shears(layout, pressed)
    rel = layout.points - center
    moved = np.hypot(*locals_.T) > 0
    cos = np.sum(locals_[moved] * rel[moved], axis=1) / (
        np.hypot(*locals_[moved].T) * np.hypot(*rel[moved].T)
    )
    np.testing.assert_allclose(cos, 1.0, atol=1e-12)


def test_global_of_upward_locals():
    field = global_shear([[0.0, 1.0]] * 5)
    assert field.global_vector == (0.0, 1.0)
    assert field.direction_deg == pytest.approx(90.0)
    assert field.magnitude == pytest.approx(1.0)


def test_global_is_mean_of_locals(rng):
    v = rng.normal(size=(40, 2))
    field = global_shear(v)
    np.testing.assert_allclose(field.global_vector, v.mean(axis=0))
    assert field.magnitude == pytest.approx(np.hypot(*v.mean(axis=0)))


def test_direction_range():
    assert global_shear([[1.0, -1e-3]]).direction_deg == pytest.approx(360 - math.degrees(1e-3))
    assert global_shear([[-1.0, 0.0]]).direction_deg == pytest.approx(180.0)
    assert 0.0 <= global_shear([[1.0, -1e-300]]).direction_deg < 360.0


def test_radial_field_cancels(layout):
    center = np.array(layout_center(layout))
    pressed, _ = simulate(layout, ContactScenario(presses=(Press(center, 3.0, 6.0),)))
    locals_ = local_shears(layout, pressed)
    field = global_shear(locals_)
    assert field.magnitude < 1e-9 * np.mean(np.hypot(*locals_.T))


def test_small_magnitude_flags_direction():
    field = global_shear([[1e-8, 0.0], [0.0, 1e-8]])
    assert field.direction_deg is None
    assert not field.direction_defined
    assert global_shear([[1e-8, 0.0]], epsilon=1e-9).direction_deg == 0.0


def test_zero_field_has_no_nan():
    field = global_shear(np.zeros((4, 2)))
    assert field.direction_deg is None
    assert field.magnitude == 0.0
    assert all(math.isfinite(v) for v in field.global_vector)


def test_empty_field_is_an_error():
    with pytest.raises(EmptyFieldError):
        global_shear(np.zeros((0, 2)))


def test_regional_subset(layout):
    locals_ = np.zeros((len(layout), 2))
    locals_[:3] = [2.0, 0.0]
    field = regional_shear(locals_, layout.ids, layout.ids[:3].tolist())
    assert field.global_vector == (2.0, 0.0)


def test_angular_difference_wraps():
    assert angular_difference(359.0, 1.0) == pytest.approx(2.0)
    assert angular_difference(10.0, 350.0) == pytest.approx(20.0)
    assert angular_difference(90.0, 270.0) == pytest.approx(180.0)


def _rotate(points, phi_deg, pivot):
    t = math.radians(phi_deg)
    r = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    return (np.asarray(points) - pivot) @ r.T + pivot


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 360, exclude_max=True), st.floats(-20, 20), st.floats(-20, 20),
       st.floats(0.1, 3.0), st.floats(0, 360))
def test_rotation_equivariance(layout, phi, px, py, magnitude, heading):
    t = math.radians(heading)
    scenario = ContactScenario(
        presses=(Press(layout.points[3], 2.0, 5.0),),
        shear=(magnitude * math.cos(t), magnitude * math.sin(t)),
    )
    current, _ = simulate(layout, scenario)
    base = global_shear(local_shears(layout, current))
    pivot = np.array([px, py])
    ref_r = layout.with_points(_rotate(layout.points, phi, pivot))
    cur_r = current.with_points(_rotate(current.points, phi, pivot))
    rotated = global_shear(local_shears(ref_r, cur_r))
    assert angular_difference(rotated.direction_deg, (base.direction_deg + phi) % 360) < 1e-6


def test_superposition_of_translation(layout):
    press = Press(layout.points[5], 2.5, 4.0)
    shift = np.array([0.4, -0.3])
    pressed, _ = simulate(layout, ContactScenario(presses=(press,)))
    translated = pressed.with_points(pressed.points + shift)
    np.testing.assert_allclose(
        local_shears(layout, translated), local_shears(layout, pressed) + shift, atol=1e-12
    )
