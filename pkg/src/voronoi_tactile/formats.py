"""Line-oriented file formats: recordings, feature records, calibration tables, config.

Every JSON-lines file opens with a header object carrying ``format`` and
``version``; floats are written with ``repr`` precision so that identical
inputs always give identical bytes. See ``docs/formats.md`` for the layouts.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .calibration import KINDS, CalibrationTable, fit_calibration
from .errors import RecordingParseError
from .geometry import CentroidFrame
from .simulator import GroundTruth

FORMAT_VERSION = 1
UNITS = ("pixel", "mm", "synthetic-unit")

RECORDING = "tactile-recording"
FEATURES = "tactile-features"
CALIBRATION = "tactile-calibration"


def dumps(obj):
    return json.dumps(obj, separators=(", ", ": "), allow_nan=False)


def _read_lines(path, expected_format):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise RecordingParseError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise RecordingParseError(f"{exc.msg} at column {exc.colno}", line=lineno) from exc
    if not rows:
        raise RecordingParseError(f"{path} is empty", line=1)
    lineno, header = rows[0]
    if not isinstance(header, dict) or header.get("format") != expected_format:
        raise RecordingParseError(f"expected a {expected_format} header", line=lineno)
    if header.get("version") != FORMAT_VERSION:
        raise RecordingParseError(
            f"unsupported {expected_format} version {header.get('version')!r}", line=lineno
        )
    return header, rows[1:]


def _require(obj, key, lineno):
    if not isinstance(obj, dict) or key not in obj:
        raise RecordingParseError(f"missing field {key!r}", line=lineno)
    return obj[key]


# --------------------------------------------------------------------------
# Recordings
# --------------------------------------------------------------------------


@dataclass
class Recording:
    frames: list
    units: str = "synthetic-unit"
    reference_index: int = 0
    metadata: dict = field(default_factory=dict)
    truth: dict = field(default_factory=dict)  # frame index -> (step, GroundTruth)

    def __post_init__(self):
        if self.units not in UNITS:
            raise ValueError(f"units must be one of {UNITS}, got {self.units!r}")

    @property
    def reference(self):
        return self.frames[self.reference_index]


def write_recording(path, recording):
    header = {
        "format": RECORDING,
        "version": FORMAT_VERSION,
        "units": recording.units,
        "reference_index": recording.reference_index,
        "frame_count": len(recording.frames),
        "metadata": recording.metadata,
    }
    lines = [dumps(header), dumps({"section": "frames"})]
    for frame in recording.frames:
        lines.append(dumps({
            "index": int(frame.timestamp),
            "ids": frame.ids.tolist(),
            "points": frame.points.tolist(),
        }))
    if recording.truth:
        lines.append(dumps({"section": "ground_truth"}))
        for index in sorted(recording.truth):
            step, truth = recording.truth[index]
            lines.append(dumps({"index": index, "step": step, **truth.to_dict()}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_recording(path):
    header, rows = _read_lines(path, RECORDING)
    units = header.get("units")
    if units not in UNITS:
        raise RecordingParseError(f"unknown units {units!r}", line=1)
    section = None
    frames, truth = [], {}
    for lineno, row in rows:
        if isinstance(row, dict) and "section" in row:
            section = row["section"]
            if section not in ("frames", "ground_truth"):
                raise RecordingParseError(f"unknown section {section!r}", line=lineno)
            continue
        if section == "frames":
            try:
                frame = CentroidFrame(
                    np.asarray(_require(row, "points", lineno), dtype=float),
                    np.asarray(_require(row, "ids", lineno)),
                    int(_require(row, "index", lineno)),
                )
            except (ValueError, TypeError) as exc:
                raise RecordingParseError(str(exc), line=lineno) from exc
            except RecordingParseError:
                raise
            except Exception as exc:
                raise RecordingParseError(f"invalid frame: {exc}", line=lineno) from exc
            if frames and frame.timestamp != frames[-1].timestamp + 1:
                raise RecordingParseError("frame indices must be consecutive", line=lineno)
            frames.append(frame)
        elif section == "ground_truth":
            try:
                index = int(row["index"])
                truth[index] = (int(row["step"]), GroundTruth.from_dict(row))
            except (KeyError, TypeError, ValueError) as exc:
                raise RecordingParseError(f"invalid ground-truth entry: {exc}", line=lineno) from exc
        else:
            raise RecordingParseError("data before any section marker", line=lineno)
    if not frames:
        raise RecordingParseError("recording holds no frames", line=len(rows) + 1)
    ref = header.get("reference_index", 0)
    if not isinstance(ref, int) or not 0 <= ref < len(frames):
        raise RecordingParseError(f"reference_index {ref!r} out of range", line=1)
    ids = frames[ref].ids
    for frame in frames:
        if not np.array_equal(frame.ids, ids):
            raise RecordingParseError(
                f"frame {frame.timestamp} does not share the reference frame's marker ids"
            )
    return Recording(frames, units, ref, header.get("metadata", {}), truth)


# --------------------------------------------------------------------------
# Feature records
# --------------------------------------------------------------------------


@dataclass
class FeatureRecord:
    index: int
    area_deltas: list
    volume: float
    contacts: list  # [(x, y, z), ...]
    shear_vector: tuple
    shear_magnitude: float
    shear_direction_deg: float | None
    grid_spacing: tuple
    volume_mm: float | None = None
    shear_magnitude_mm: float | None = None
    flags: dict = field(default_factory=lambda: {
        "direction_undefined": False,
        "calibration_out_of_range": False,
    })

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        missing = names - set(d) - {"volume_mm", "shear_magnitude_mm", "flags"}
        if missing:
            raise KeyError(", ".join(sorted(missing)))
        rec = cls(**{k: v for k, v in d.items() if k in names})
        rec.contacts = [tuple(c) for c in rec.contacts]
        rec.shear_vector = tuple(rec.shear_vector)
        rec.grid_spacing = tuple(rec.grid_spacing)
        return rec


def _clean(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite value in feature record")
        return obj
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_features(path, records, header_extra=None):
    header = {"format": FEATURES, "version": FORMAT_VERSION, **(header_extra or {})}
    lines = [dumps(_clean(header))] + [dumps(_clean(r.to_dict())) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_features(path):
    header, rows = _read_lines(path, FEATURES)
    records = []
    for lineno, row in rows:
        try:
            records.append(FeatureRecord.from_dict(row))
        except (KeyError, TypeError) as exc:
            raise RecordingParseError(f"invalid feature record: {exc}", line=lineno) from exc
    return header, records


# --------------------------------------------------------------------------
# Calibration tables
# --------------------------------------------------------------------------


def write_calibration(path, table):
    header = {
        "format": CALIBRATION,
        "version": FORMAT_VERSION,
        "kind": table.kind,
        "units": table.units,
        "mechanical_units": table.mechanical_units,
        "knots": len(table),
    }
    lines = [dumps(header)]
    lines += [dumps({"raw": r, "mechanical": m}) for r, m in table.samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_calibration(path):
    header, rows = _read_lines(path, CALIBRATION)
    kind = header.get("kind")
    if kind not in KINDS:
        raise RecordingParseError(f"unknown calibration kind {kind!r}", line=1)
    units = header.get("units")
    if units not in UNITS:
        raise RecordingParseError(f"unknown units {units!r}", line=1)
    pairs = []
    for lineno, row in rows:
        try:
            pairs.append((float(row["raw"]), float(row["mechanical"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordingParseError(f"invalid knot: {exc}", line=lineno) from exc
    return fit_calibration(pairs, kind, units)


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------

CONFIG_SECTIONS = ("tactile", "validate")


def read_config(path):
    """Flat ``{section: {key: str}}`` view of an INI-style config file."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise RecordingParseError(f"malformed config: {exc.message}", line=line) from exc
    except OSError as exc:
        raise RecordingParseError(f"cannot read {path}: {exc}") from exc
    unknown = set(parser.sections()) - set(CONFIG_SECTIONS)
    if unknown:
        raise RecordingParseError(f"unknown config sections: {sorted(unknown)}")
    version = parser.get("tactile", "version", fallback=None)
    if version is None or version.strip() != str(FORMAT_VERSION):
        raise RecordingParseError(f"config must declare version = {FORMAT_VERSION} in [tactile]")
    return {s: dict(parser.items(s)) for s in parser.sections()}


def recording_from_dataset(dataset, metadata=None):
    """Recording holding a protocol's reference frame, its samples and their truth."""
    frames = [dataset.reference] + [s.frame for s in dataset.samples]
    truth = {s.frame.timestamp: (s.step, s.truth) for s in dataset.samples}
    meta = {"protocol": dataset.kind, **(metadata or {})}
    return Recording(frames, "synthetic-unit", 0, meta, truth)
