"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats
from .calibration import fit_calibration
from .errors import RecordingParseError, TactileError, UnitMismatchError
from .geometry import tessellate
from .pipeline import (
    TactilePipeline,
    calibration_pairs,
    configs_from_mapping,
    infer_recording,
    validate_features,
)
from .render import RenderSpec, render_frame
from .shear import ShearField, local_shears
from .simulator import LayoutSpec, generate_layout, run_protocol
from .surface import Contact

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load_configs(args):
    mapping = formats.read_config(args.config) if getattr(args, "config", None) else None
    overrides = {}
    if getattr(args, "grid", None):
        overrides["grid_nx"], overrides["grid_ny"] = args.grid
    if getattr(args, "contact_threshold", None) is not None:
        overrides["contact_threshold"] = args.contact_threshold
    try:
        return configs_from_mapping(mapping, overrides)
    except (ValueError, TypeError) as exc:
        raise RecordingParseError(f"config: {exc}") from exc


def _load_tables(paths):
    tables = {}
    for path in paths or []:
        table = formats.read_calibration(path)
        if table.kind in tables:
            raise InputError(f"more than one {table.kind} calibration given")
        tables[table.kind] = table
    return tables


def _header(recording, pipe):
    return {
        "units": recording.units,
        "reference_index": recording.reference_index,
        "contact_threshold": pipe.contact_threshold,
        "grid": list(pipe.config.resolution),
        "calibrated": {
            "depth": pipe.depth_table is not None,
            "shear": pipe.shear_table is not None,
        },
        "angle_convention": "degrees counter-clockwise from +x, [0, 360)",
    }


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args):
    spec = LayoutSpec(rings=args.layout_rings, pitch=args.pitch, jitter=args.jitter, seed=args.seed)
    layout = generate_layout(spec)
    dataset = run_protocol(
        args.protocol, layout, noise_sigma=args.noise, seed=args.seed,
        samples_per_step=args.samples_per_step,
    )
    meta = {
        "layout": {"rings": spec.rings, "pitch": spec.pitch, "jitter": spec.jitter, "seed": spec.seed},
        "noise_sigma": args.noise,
        "seed": args.seed,
        "samples_per_step": args.samples_per_step,
    }
    recording = formats.recording_from_dataset(dataset, meta)
    formats.write_recording(args.out, recording)
    print(f"wrote {len(recording.frames)} frames ({args.protocol} protocol) to {args.out}")
    return EXIT_OK


def cmd_infer(args):
    recording = formats.read_recording(args.infile)
    config, _ = _load_configs(args)
    tables = _load_tables(args.calib)
    pipe, records = infer_recording(recording, config, tables.get("depth"), tables.get("shear"))
    formats.write_features(args.out, records, _header(recording, pipe))
    print(f"wrote {len(records)} feature records to {args.out}")
    return EXIT_OK


def cmd_calibrate(args):
    recording = formats.read_recording(args.infile)
    if not recording.truth:
        raise InputError(f"{args.infile} has no ground-truth section to calibrate against")
    config, _ = _load_configs(args)
    _, records = infer_recording(recording, config)
    pairs = calibration_pairs(recording, records, args.kind)
    table = fit_calibration(pairs, args.kind, recording.units)
    formats.write_calibration(args.out, table)
    print(f"wrote {len(table)}-knot {args.kind} calibration to {args.out}")
    if args.plot:
        from .plotting import plot_calibration_curve

        raw, mech = zip(*pairs)
        plot_calibration_curve(raw, mech, args.plot, args.kind, table)
    return EXIT_OK


def cmd_render(args):
    recording = formats.read_recording(args.infile)
    header, records = formats.read_features(args.features)
    config, _ = _load_configs(args)
    pipe = TactilePipeline(recording.reference, config)
    spec = RenderSpec(color_scale_max=args.color_scale_max)
    frames = {f.timestamp: f for f in recording.frames}
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        if rec.index not in frames:
            raise InputError(f"feature record {rec.index} has no frame in {args.infile}")
        frame = frames[rec.index]
        cells = tessellate(frame, pipe.boundary)
        shear = ShearField(
            local_shears(recording.reference, frame),
            tuple(rec.shear_vector),
            rec.shear_magnitude,
            rec.shear_direction_deg,
        )
        contacts = [Contact(*c) for c in rec.contacts]
        doc = render_frame(cells, np.asarray(rec.area_deltas), shear, contacts, spec)
        (out_dir / args.pattern.format(index=rec.index)).write_text(doc)
    print(f"wrote {len(records)} documents to {out_dir}")
    return EXIT_OK


def cmd_validate(args):
    recording = formats.read_recording(args.infile)
    if not recording.truth:
        raise InputError(f"{args.infile} has no ground-truth section")
    _, records = formats.read_features(args.features)
    _, vconfig = _load_configs(args)
    checks = validate_features(recording, records, vconfig)
    for check in checks:
        print(check.line())
    if args.report_dir:
        _write_report(Path(args.report_dir), recording, records, checks)
    passed = all(c.passed for c in checks)
    print("validation", "passed" if passed else "FAILED")
    return EXIT_OK if passed else EXIT_VALIDATION


def _write_report(out_dir, recording, records, checks):
    from .plotting import plot_calibration_curve, plot_direction_errors

    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [formats.dumps({
        "check": c.name, "value": c.value, "tolerance": c.tolerance,
        "passed": bool(c.passed), "detail": c.detail,
    }) for c in checks]
    (out_dir / "validation.jsonl").write_text("\n".join(lines) + "\n")

    by_index = {r.index: r for r in records}
    items = [(by_index[i], t) for i, (_, t) in sorted(recording.truth.items())]
    headed = [(r, t) for r, t in items if t.shear_angle_deg is not None]
    if headed:
        plot_direction_errors(
            [t.shear_angle_deg for _, t in headed],
            [r.shear_direction_deg for r, _ in headed],
            out_dir / "direction_errors.svg",
        )
    names = {c.name for c in checks}
    if "volume_depth_spearman" in names:
        plot_calibration_curve([r.volume for r, _ in items], [t.depth for _, t in items],
                               out_dir / "depth_calibration.svg", "depth")
    if "shear_magnitude_r2" in names:
        plot_calibration_curve([r.shear_magnitude for r, _ in items],
                               [t.shear_magnitude for _, t in items],
                               out_dir / "shear_calibration.svg", "shear")


def cmd_export_surface(args):
    recording = formats.read_recording(args.infile)
    frames = {f.timestamp: f for f in recording.frames}
    if args.frame not in frames:
        raise InputError(f"frame {args.frame} not in {args.infile}")
    config, _ = _load_configs(args)
    pipe = TactilePipeline(recording.reference, config)
    _, _, surface, _, _ = pipe.analyse(frames[args.frame])
    ny, nx = surface.shape
    lines = [
        "# tactile-surface version 1",
        f"# frame {args.frame}; units {recording.units}; grid {nx} x {ny}; z = area delta (%)",
        "x,y,z,inside",
    ]
    for i, y in enumerate(surface.y_axis):
        for j, x in enumerate(surface.x_axis):
            inside = bool(surface.mask[i, j])
            z = repr(float(surface.grid[i, j])) if inside else "nan"
            lines.append(f"{float(x)!r},{float(y)!r},{z},{int(inside)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {nx}x{ny} surface for frame {args.frame} to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voronoi-tactile",
        description="Tactile features from marker centroids via bounded Voronoi tessellation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic protocol recording with ground truth")
    p.add_argument("--layout-rings", type=int, default=6)
    p.add_argument("--pitch", type=float, default=3.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--protocol", choices=("depth", "shear", "direction"), required=True)
    p.add_argument("--noise", type=float, default=0.0, help="per-coordinate noise sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples-per-step", type=int, default=None,
                   help="frames per protocol step (default 10 for sweeps, 1 for direction)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    def config_flags(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"))
        p.add_argument("--contact-threshold", type=float)

    p = sub.add_parser("infer", help="extract feature records from a recording")
    p.add_argument("--in", dest="infile", required=True)
    config_flags(p)
    p.add_argument("--calib", action="append", help="calibration table (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("calibrate", help="fit a calibration table from a protocol recording")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", choices=("depth", "shear"), required=True)
    config_flags(p)
    p.add_argument("--plot", help="also write the calibration curve figure here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("render", help="write one SVG document per feature record")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--features", required=True)
    config_flags(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pattern", default="frame_{index:04d}.svg")
    p.add_argument("--color-scale-max", type=float, default=30.0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="compare feature records with embedded ground truth")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--config", help="INI config file")
    p.add_argument("--report-dir", help="write validation.jsonl and figures here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export-surface", help="dump one frame's deformation surface grid")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--frame", type=int, required=True)
    config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_surface)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RecordingParseError, UnitMismatchError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TactileError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
