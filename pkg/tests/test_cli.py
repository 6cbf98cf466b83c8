import json

import pytest

from voronoi_tactile import formats
from voronoi_tactile.cli import EXIT_INPUT, EXIT_OK, EXIT_VALIDATION, main


@pytest.fixture(scope="module")
def direction_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("direction")
    rec, feats = d / "rec.jsonl", d / "feat.jsonl"
    assert main(["simulate", "--protocol", "direction", "--out", str(rec)]) == 0
    assert main(["infer", "--in", str(rec), "--out", str(feats)]) == 0
    return d, rec, feats


def test_simulate_writes_ground_truth(direction_run):
    _, rec, _ = direction_run
    recording = formats.read_recording(rec)
    assert len(recording.frames) == 37
    assert len(recording.truth) == 36
    assert recording.metadata["protocol"] == "direction"


def test_validate_passes_and_prints_angular_error(direction_run, capsys):
    d, rec, feats = direction_run
    report = d / "report"
    code = main(["validate", "--in", str(rec), "--features", str(feats), "--report-dir", str(report)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "mean_abs_angular_error_deg" in out
    lines = [json.loads(s) for s in (report / "validation.jsonl").read_text().splitlines()]
    assert {x["check"] for x in lines} == {"mean_abs_angular_error_deg", "contact_hit_rate"}
    assert (report / "direction_errors.svg").stat().st_size > 0


def test_validate_failure_exit_code(direction_run, tmp_path):
    _, rec, feats = direction_run
    cfg = tmp_path / "strict.ini"
    cfg.write_text("[tactile]\nversion = 1\n\n[validate]\nmax_mean_angular_error_deg = 0\n")
    assert main(["validate", "--in", str(rec), "--features", str(feats), "--config", str(cfg)]) == EXIT_VALIDATION


def test_infer_is_byte_deterministic(direction_run):
    d, rec, feats = direction_run
    again = d / "again.jsonl"
    assert main(["infer", "--in", str(rec), "--out", str(again)]) == 0
    assert again.read_bytes() == feats.read_bytes()


def test_render_is_byte_deterministic(direction_run):
    d, rec, feats = direction_run
    a, b = d / "svg_a", d / "svg_b"
    for out in (a, b):
        assert main(["render", "--in", str(rec), "--features", str(feats), "--out-dir", str(out)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert len(names) == 37 and names[0] == "frame_0000.svg"
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_infer_empty_recording(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code = main(["infer", "--in", str(empty), "--out", str(tmp_path / "f.jsonl")])
    assert code == EXIT_INPUT
    assert "line 1" in capsys.readouterr().err


def test_infer_missing_file(tmp_path):
    assert main(["infer", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "f")]) == EXIT_INPUT


def test_calibrate_and_apply(tmp_path):
    rec = tmp_path / "shear.jsonl"
    table = tmp_path / "shear_cal.jsonl"
    plot = tmp_path / "shear_cal.svg"
    assert main(["simulate", "--protocol", "shear", "--layout-rings", "3",
                 "--samples-per-step", "1", "--out", str(rec)]) == 0
    assert main(["calibrate", "--in", str(rec), "--kind", "shear", "--out", str(table),
                 "--plot", str(plot)]) == 0
    loaded = formats.read_calibration(table)
    assert len(loaded) == 21 and loaded.kind == "shear"
    assert plot.stat().st_size > 0
    feats = tmp_path / "f.jsonl"
    assert main(["infer", "--in", str(rec), "--calib", str(table), "--out", str(feats)]) == 0
    header, records = formats.read_features(feats)
    assert header["calibrated"] == {"depth": False, "shear": True}
    assert all(r.shear_magnitude_mm is not None and r.volume_mm is None for r in records[1:])


def test_unit_mismatch(tmp_path, capsys):
    rec = tmp_path / "r.jsonl"
    assert main(["simulate", "--protocol", "direction", "--layout-rings", "2", "--out", str(rec)]) == 0
    cal = tmp_path / "c.jsonl"
    cal.write_text(
        json.dumps({"format": "tactile-calibration", "version": 1, "kind": "depth", "units": "mm"})
        + "\n" + json.dumps({"raw": 0, "mechanical": 0}) + "\n"
        + json.dumps({"raw": 1, "mechanical": 5}) + "\n"
    )
    code = main(["infer", "--in", str(rec), "--calib", str(cal), "--out", str(tmp_path / "f")])
    assert code == EXIT_INPUT
    assert "mm" in capsys.readouterr().err


def test_export_surface(direction_run, tmp_path):
    _, rec, _ = direction_run
    out = tmp_path / "surface.csv"
    assert main(["export-surface", "--in", str(rec), "--frame", "3", "--grid", "16", "12",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# tactile-surface version 1"
    assert lines[2] == "x,y,z,inside"
    rows = [line.split(",") for line in lines[3:]]
    assert len(rows) == 16 * 12
    assert any(r[3] == "1" for r in rows) and all(r[2] == "nan" for r in rows if r[3] == "0")


def test_export_surface_unknown_frame(direction_run, tmp_path):
    _, rec, _ = direction_run
    assert main(["export-surface", "--in", str(rec), "--frame", "999",
                 "--out", str(tmp_path / "s.csv")]) == EXIT_INPUT


def test_bad_config_is_input_error(direction_run, tmp_path):
    _, rec, _ = direction_run
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[tactile]\nversion = 1\ngrid_nx = many\n")
    assert main(["infer", "--in", str(rec), "--config", str(cfg), "--out", str(tmp_path / "f")]) == EXIT_INPUT
