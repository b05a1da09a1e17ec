"""Command-line front end. Thin wrappers over the pipeline engine;
`serve` starts the HTTP service over a prepared workspace.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scenario as sc
from .codes import PropertyKind
from .pipeline import (
    PipelineConfig,
    Workspace,
    eval_stage,
    infer_stage,
    learn_stage,
    parse_config_file,
    run_pipeline,
    scenario_config,
    segment_stage,
    spine_of,
)
from .smoothing import SmoothingConfig, smooth_candidates


def cmd_gen(args) -> int:
    cfg = _base_config(args)
    dataset = sc.generate(scenario_config(cfg))
    ws = Workspace(args.out)
    ws.save_relation("instances", dataset.instances)
    ws.save_relation("candidates", dataset.candidates)
    ws.save_relation("labels", dataset.labels)
    ws.save_relation("truth", sc.truth_labels_relation(dataset.truth))
    ws.save_relation("truth_codes", sc.truth_codes_relation(dataset.truth))
    print(f"wrote {len(dataset.instances)} instances to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    ws = Workspace(args.out)
    src = Workspace(args.data)
    for key in ("instances", "candidates", "labels"):
        rel = src.load_relation(key)
        ws.save_relation(key, rel)
        print(f"ingested {key}: {len(rel)} rows")
    for key in ("truth", "truth_codes"):
        if src.has(key):
            ws.save_relation(key, src.load_relation(key))
    return 0


def cmd_smooth(args) -> int:
    cfg = _base_config(args)
    ws = Workspace(args.workspace)
    candidates = ws.load_relation(
        "smoothed" if args.resume and ws.has("smoothed") else "candidates"
    )
    spine = spine_of(ws.load_relation("instances"))
    prop = PropertyKind(args.property.upper())
    half_width = args.half_width or (
        cfg.lap_half_width if prop is PropertyKind.LAP else cfg.bho_half_width
    )
    out = smooth_candidates(
        candidates,
        SmoothingConfig(prop, half_width),
        spine=spine,
        cap=cfg.prune_cap,
        floor=cfg.prune_floor,
    )
    ws.save_relation("smoothed", out)
    print(f"smoothed {args.property} with half-width {half_width}: {len(out)} rows")
    return 0


def cmd_learn(args) -> int:
    cfg = _base_config(args)
    ws = Workspace(args.workspace)
    smoothed = ws.load_relation("smoothed")
    labels = ws.load_relation("labels")
    spine = spine_of(ws.load_relation("instances"))
    lap_table, bho_table = learn_stage(smoothed, labels, spine, cfg)
    ws.save_axioms(lap_table)
    ws.save_axioms(bho_table)
    print(f"learned {len(lap_table)} LAP and {len(bho_table)} BHO axiom rows")
    return 0


def cmd_infer(args) -> int:
    cfg = _base_config(args)
    ws = Workspace(args.workspace)
    smoothed = ws.load_relation("smoothed")
    spine = spine_of(ws.load_relation("instances"))
    lap_table = ws.load_axioms(PropertyKind.LAP)
    bho_table = ws.load_axioms(PropertyKind.BHO)
    predictions = infer_stage(smoothed, lap_table, bho_table, spine, cfg)
    ws.save_relation("predictions", predictions)
    print(f"scored {len(predictions)} instances")
    return 0


def cmd_segment(args) -> int:
    cfg = _base_config(args)
    ws = Workspace(args.workspace)
    predictions = ws.load_relation("predictions")
    segments, rel = segment_stage(predictions, cfg)
    ws.save_relation("segments", rel)
    print(f"{len(segments)} segments after elimination")
    return 0


def cmd_eval(args) -> int:
    cfg = _base_config(args)
    if args.tolerance is not None:
        cfg = _override(cfg, hl_tolerance=args.tolerance)
    ws = Workspace(args.workspace)
    predictions = ws.load_relation("predictions")
    smoothed = ws.load_relation("smoothed")
    spine = spine_of(ws.load_relation("instances"))
    truth = {r[0]: r[1] for r in ws.load_relation("truth").rows()}
    truth_codes = None
    if ws.has("truth_codes"):
        truth_codes = {r[0]: r[2] for r in ws.load_relation("truth_codes").rows()}
    seg_rel = ws.load_relation("segments")
    segments = _segments_from_relation(seg_rel)
    report = eval_stage(
        predictions, segments, smoothed, truth, spine, cfg, truth_codes
    )
    out_path = Path(args.out) if args.out else ws.path("report")
    out_path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"weighted F: {report['weighted_f']:.4f} -> {out_path}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _base_config(args)
    record = run_pipeline(cfg, args.workspace)
    print(f"run {record.run_id}: weighted F {record.report['weighted_f']:.4f}")
    for name, timing in record.timings.items():
        ratio = f" ratio {timing.ratio:.4f}" if timing.ratio is not None else ""
        print(f"  {name}: {timing.seconds:.2f}s{ratio}")
    print(f"  total: {record.total_seconds:.2f}s ratio {record.ratio:.4f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.workspace, _base_config(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _segments_from_relation(rel):
    from .segmentation import Segment

    idx = rel.schema.index_of
    return [
        Segment(
            row[idx("start_id")],
            row[idx("serial")],
            row[idx("t_start")],
            row[idx("activity")],
            row[idx("length_instances")],
        )
        for row in rel.rows()
    ]


def _base_config(args) -> PipelineConfig:
    cfg = parse_config_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "lap_noise", None) is not None:
        overrides["lap_p_correct_top"] = args.lap_noise
    if getattr(args, "bho_noise", None) is not None:
        overrides["bho_p_correct_top"] = args.bho_noise
    return _override(cfg, **overrides) if overrides else cfg


def _override(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    import dataclasses

    return dataclasses.replace(cfg, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actrec", description="probabilistic activity recognition pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workspace=True):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="scenario seed")
        if workspace:
            p.add_argument("--workspace", required=True, help="workspace directory")

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    common(p, workspace=False)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--lap-noise", type=float, help="LAP p_correct_top")
    p.add_argument("--bho-noise", type=float, help="BHO p_correct_top")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ingest", help="load relation CSVs into a workspace")
    common(p, workspace=False)
    p.add_argument("--data", required=True, help="directory with relation CSVs")
    p.add_argument("--out", required=True, help="workspace directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("smooth", help="smooth one candidate property")
    common(p)
    p.add_argument("--property", required=True, choices=["LAP", "BHO", "lap", "bho"])
    p.add_argument("--half-width", type=int, help="window half-width k")
    p.add_argument(
        "--resume", action="store_true", help="smooth on top of an earlier pass"
    )
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("learn", help="learn axiom tables from training runs")
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("infer", help="score test instances")
    common(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("segment", help="build the final activity timeline")
    common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    common(p)
    p.add_argument("--tolerance", type=float, help="high-level tolerance seconds")
    p.add_argument("--out", help="report path (default: workspace report.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    common(p)
    p.add_argument("--lap-noise", type=float, help="LAP p_correct_top")
    p.add_argument("--bho-noise", type=float, help="BHO p_correct_top")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("serve", help="start the HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"{args.command}: I/O error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, LookupError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
