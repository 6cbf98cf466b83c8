"""Piecewise-linear calibration from raw inferred values to millimetres."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationProtocolError, CalibrationQualityError, OutOfRangeError

KINDS = ("depth", "shear")


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    raw: np.ndarray
    mechanical: np.ndarray
    kind: str
    units: str = "synthetic-unit"
    mechanical_units: str = "mm"

    def __len__(self):
        return len(self.raw)

    @property
    def samples(self):
        return list(zip(self.raw.tolist(), self.mechanical.tolist()))

    @property
    def domain(self):
        return float(self.raw[0]), float(self.raw[-1])

    def __call__(self, raw):
        return apply_calibration(self, raw)


def fit_calibration(pairs, kind, units="synthetic-unit"):
    """Build a table from (raw, mechanical) pairs ordered by mechanical value.

    Mechanical values must strictly increase; raw values must not decrease. A
    raw dip is rejected with the offending index rather than sorted away.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(arr) < 2:
        raise CalibrationProtocolError(f"need at least 2 calibration pairs, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise CalibrationProtocolError("calibration pairs must be finite")
    raw, mech = arr[:, 0].copy(), arr[:, 1].copy()
    bad = np.flatnonzero(np.diff(mech) <= 0)
    if len(bad):
        k = int(bad[0]) + 1
        raise CalibrationProtocolError(
            f"mechanical values must strictly increase; index {k} has {mech[k]} after {mech[k - 1]}"
        )
    bad = np.flatnonzero(np.diff(raw) < 0)
    if len(bad):
        k = int(bad[0]) + 1
        raise CalibrationQualityError(
            f"raw value at index {k} ({raw[k]:.6g}) is below the previous one ({raw[k - 1]:.6g})",
            index=k,
        )
    if raw[-1] == raw[0]:
        raise CalibrationQualityError("raw values are constant across the sweep", index=len(raw) - 1)
    raw.setflags(write=False)
    mech.setflags(write=False)
    return CalibrationTable(raw, mech, kind, units)


def apply_calibration(table, raw):
    """Interpolate linearly between knots; exact at knots, no extrapolation.

    On a flat run of equal raw knots the first knot's mechanical value is used.
    """
    raw_arr = np.asarray(raw, dtype=float)
    lo, hi = table.domain
    if np.any(raw_arr < lo) or np.any(raw_arr > hi) or np.any(~np.isfinite(raw_arr)):
        raise OutOfRangeError(f"raw value {raw} outside calibrated range [{lo:.6g}, {hi:.6g}]")
    x, y = table.raw, table.mechanical
    k = np.clip(np.searchsorted(x, raw_arr, side="left"), 1, len(x) - 1)
    x0, x1 = x[k - 1], x[k]
    y0, y1 = y[k - 1], y[k]
    at_knot = raw_arr == x1
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(x1 > x0, (raw_arr - x0) / (x1 - x0), 0.0)
    out = np.where(at_knot, y1, y0 + t * (y1 - y0))
    # raw equal to the first knot
    out = np.where(raw_arr == x[0], y[0], out)
    return float(out) if out.ndim == 0 else out
