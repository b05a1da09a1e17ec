"""Batch orchestration: the stage chain shared by the CLI and the service.

Stages map onto store views: raw candidate relations are smoothed
(LAP over all serials, BHO over test serials only, since training BHO
is already deterministic), axioms are learned from the training runs,
test instances are scored and segmented, and the result is compared
against ground truth. Each run writes its relations, axiom tables,
metrics report, and a run record with per-stage timings into a
workspace directory.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import axioms as ax
from . import evaluation as ev
from . import inference as inf
from . import scenario as sc
from . import segmentation as seg
from .codes import PropertyKind, SerialCode
from .errors import InvalidConfig
from .relstore import ProbRelation, RelStore, ViewDef, load_snapshot, save_snapshot
from .smoothing import SmoothingConfig, smooth_candidates

FILES = {
    "instances": "instances.csv",
    "candidates": "candidates.csv",
    "smoothed": "candidates_smoothed.csv",
    "labels": "labels.csv",
    "truth": "truth.csv",
    "truth_codes": "truth_codes.csv",
    "predictions": "predictions.csv",
    "segments": "segments.csv",
    "axioms_lap": "axioms_LAP.json",
    "axioms_bho": "axioms_BHO.json",
    "report": "report.json",
    "run_record": "run_record.json",
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    lap_half_width: int = 3
    bho_half_width: int = 5
    prune_cap: int = 3
    prune_floor: float = 0.01
    weights: inf.FusionWeights = field(default_factory=inf.FusionWeights)
    thresholds: tuple[int, ...] = seg.DEFAULT_THRESHOLDS
    bho_tolerance: float = 1.0
    hl_tolerance: float = 30.0
    include_null: bool = True
    smooth_bho_test_only: bool = True
    smooth_lap_test_only: bool = False
    strict_pairs: bool = False
    lap_p_correct_top: float = 1.0
    bho_p_correct_top: float = 1.0
    lap_null_rate: float = 0.0
    bho_null_rate: float = 0.0
    subjects: int = 2
    schedule_scale: float = 1.0  # shrinks run length for quick experiments

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "lap_half_width": self.lap_half_width,
            "bho_half_width": self.bho_half_width,
            "prune_cap": self.prune_cap,
            "prune_floor": self.prune_floor,
            "weights_m": {str(k): v for k, v in sorted(self.weights.m.items())},
            "weights_n": {str(k): v for k, v in sorted(self.weights.n.items())},
            "thresholds": list(self.thresholds),
            "bho_tolerance": self.bho_tolerance,
            "hl_tolerance": self.hl_tolerance,
            "include_null": self.include_null,
            "smooth_bho_test_only": self.smooth_bho_test_only,
            "smooth_lap_test_only": self.smooth_lap_test_only,
            "strict_pairs": self.strict_pairs,
            "lap_p_correct_top": self.lap_p_correct_top,
            "bho_p_correct_top": self.bho_p_correct_top,
            "lap_null_rate": self.lap_null_rate,
            "bho_null_rate": self.bho_null_rate,
            "subjects": self.subjects,
            "schedule_scale": self.schedule_scale,
        }


_CONFIG_KEYS = {
    "seed": int,
    "lap_half_width": int,
    "bho_half_width": int,
    "prune_cap": int,
    "prune_floor": float,
    "bho_tolerance": float,
    "hl_tolerance": float,
    "include_null": None,  # bool, parsed below
    "smooth_bho_test_only": None,
    "smooth_lap_test_only": None,
    "strict_pairs": None,
    "lap_p_correct_top": float,
    "bho_p_correct_top": float,
    "lap_null_rate": float,
    "bho_null_rate": float,
    "subjects": int,
    "schedule_scale": float,
    "thresholds": None,  # comma-separated ints
}


def parse_config_file(path: str | Path) -> PipelineConfig:
    """Flat key=value lines; unknown keys are rejected, blank lines and
    #-comments ignored. An empty file yields all defaults."""
    kwargs: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
        conv = _CONFIG_KEYS[key]
        if conv is not None:
            try:
                kwargs[key] = conv(value)
            except ValueError:
                raise InvalidConfig(f"{path}:{lineno}: bad value for {key}") from None
        elif key == "thresholds":
            kwargs[key] = tuple(int(v) for v in value.split(","))
        else:
            if value.lower() not in ("true", "false", "1", "0"):
                raise InvalidConfig(f"{path}:{lineno}: bad boolean for {key}")
            kwargs[key] = value.lower() in ("true", "1")
    return PipelineConfig(**kwargs)


@dataclass
class StageTiming:
    seconds: float
    data_seconds: float

    @property
    def ratio(self) -> float | None:
        return self.seconds / self.data_seconds if self.data_seconds > 0 else None


@dataclass
class RunRecord:
    run_id: str
    config: dict
    timings: dict[str, StageTiming]
    data_seconds: float      # activity time of the evaluated (test) data
    total_seconds: float
    report: dict

    @property
    def ratio(self) -> float:
        return self.total_seconds / self.data_seconds if self.data_seconds else 0.0

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "timings": {
                name: {
                    "seconds": t.seconds,
                    "data_seconds": t.data_seconds,
                    "ratio": t.ratio,
                }
                for name, t in self.timings.items()
            },
            "data_seconds": self.data_seconds,
            "total_seconds": self.total_seconds,
            "ratio": self.ratio,
            "report": self.report,
        }


def scenario_config(cfg: PipelineConfig) -> sc.ScenarioConfig:
    if cfg.schedule_scale <= 0:
        raise InvalidConfig(f"schedule_scale {cfg.schedule_scale} must be positive")
    schedule = tuple(
        (a, d * cfg.schedule_scale) for a, d in sc.default_schedule()
    )
    return sc.ScenarioConfig(
        seed=cfg.seed, subjects=cfg.subjects, schedule=schedule
    ).with_noise(
        lap=sc.NoiseProfile(p_correct_top=cfg.lap_p_correct_top, null_rate=cfg.lap_null_rate),
        bho=sc.NoiseProfile(p_correct_top=cfg.bho_p_correct_top, null_rate=cfg.bho_null_rate),
    )


class Workspace:
    """A directory of relation snapshots and axiom tables."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, key: str) -> Path:
        return self.root / FILES[key]

    def save_relation(self, key: str, rel: ProbRelation) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        save_snapshot(rel, self.path(key))

    def load_relation(self, key: str) -> ProbRelation:
        return load_snapshot(self.path(key))

    def has(self, key: str) -> bool:
        return self.path(key).exists()

    def save_axioms(self, table: ax.AxiomTable) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        key = "axioms_lap" if table.prop is PropertyKind.LAP else "axioms_bho"
        ax.save_axioms(table, self.path(key))

    def load_axioms(self, prop: PropertyKind) -> ax.AxiomTable:
        key = "axioms_lap" if prop is PropertyKind.LAP else "axioms_bho"
        return ax.load_axioms(self.path(key))

    def save_json(self, key: str, doc: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.path(key).write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


# ---------------------------------------------------------------------------
# Stage helpers

def spine_of(instances: ProbRelation) -> list[tuple[int, str, float]]:
    return sorted(instances.rows())


def serials_of(spine, predicate) -> set[str]:
    return {s for _, s, _ in spine if predicate(SerialCode.parse(s))}


def smooth_stage(
    candidates: ProbRelation,
    spine: list[tuple[int, str, float]],
    cfg: PipelineConfig,
) -> tuple[ProbRelation, dict[str, StageTiming]]:
    """LAP then BHO smoothing, each timed against its own data length."""
    test_serials = serials_of(spine, lambda s: s.is_test)
    all_serials = {s for _, s, _ in spine}
    seconds_per_serial = _serial_seconds(spine)

    timings: dict[str, StageTiming] = {}

    lap_scope = test_serials if cfg.smooth_lap_test_only else all_serials
    t0 = time.perf_counter()
    out = smooth_candidates(
        candidates,
        SmoothingConfig(PropertyKind.LAP, cfg.lap_half_width),
        spine=[r for r in spine if r[1] in lap_scope],
        serials=lap_scope,
        cap=cfg.prune_cap,
        floor=cfg.prune_floor,
    )
    timings["lap_smooth"] = StageTiming(
        time.perf_counter() - t0, sum(seconds_per_serial[s] for s in lap_scope)
    )

    bho_scope = test_serials if cfg.smooth_bho_test_only else all_serials
    t0 = time.perf_counter()
    out = smooth_candidates(
        out,
        SmoothingConfig(PropertyKind.BHO, cfg.bho_half_width),
        spine=[r for r in spine if r[1] in bho_scope],
        serials=bho_scope,
        cap=cfg.prune_cap,
        floor=cfg.prune_floor,
    )
    timings["bho_smooth"] = StageTiming(
        time.perf_counter() - t0, sum(seconds_per_serial[s] for s in bho_scope)
    )
    return out, timings


def _serial_seconds(spine) -> dict[str, float]:
    counts: dict[str, int] = {}
    for _, serial, _ in spine:
        counts[serial] = counts.get(serial, 0) + 1
    return {s: c / seg.INSTANCES_PER_SECOND for s, c in counts.items()}


def learn_stage(
    smoothed: ProbRelation,
    labels: ProbRelation,
    spine: list[tuple[int, str, float]],
    cfg: PipelineConfig,
) -> tuple[ax.AxiomTable, ax.AxiomTable]:
    """Learn LAP axioms from smoothed argmax truth, BHO from the
    deterministic training rows."""
    train_serials = serials_of(spine, lambda s: s.is_training)
    train_ids = [i for i, s, _ in spine if s in train_serials]
    label_map = {row[0]: row[1] for row in labels.rows()}

    lap_truth = ax.prepare_truth(smoothed, PropertyKind.LAP, train_ids, train_serials)
    bho_truth = ax.prepare_truth(smoothed, PropertyKind.BHO, train_ids, train_serials)
    lap_table = ax.learn_axioms(lap_truth, label_map, PropertyKind.LAP)
    bho_table = ax.learn_axioms(bho_truth, label_map, PropertyKind.BHO)
    return lap_table, bho_table


def infer_stage(
    smoothed: ProbRelation,
    lap_table: ax.AxiomTable,
    bho_table: ax.AxiomTable,
    spine: list[tuple[int, str, float]],
    cfg: PipelineConfig,
) -> ProbRelation:
    test_serials = serials_of(spine, lambda s: s.is_test)
    test_spine = [r for r in spine if r[1] in test_serials]
    return inf.predict_all(
        smoothed,
        bho_table,
        lap_table,
        cfg.weights,
        test_spine,
        cfg.strict_pairs,
    )


def segment_stage(
    predictions: ProbRelation, cfg: PipelineConfig
) -> tuple[list[seg.Segment], ProbRelation]:
    idx = predictions.schema.index_of
    i_id, i_ser, i_t, i_w = (
        idx("instance_id"),
        idx("serial"),
        idx("t_start"),
        idx("winner"),
    )
    by_serial: dict[str, list[tuple[int, float, int]]] = {}
    for row in predictions.rows():
        by_serial.setdefault(row[i_ser], []).append((row[i_id], row[i_t], row[i_w]))

    elim = seg.EliminationConfig(cfg.thresholds)
    segments: list[seg.Segment] = []
    for serial in sorted(by_serial):
        labeled = sorted(by_serial[serial])
        segments.extend(seg.three_step_eliminate(seg.rearrange(labeled, serial), elim))

    rows = [
        (s.serial, s.start_id, s.t_start, s.activity, s.length_instances, s.length_seconds)
        for s in segments
    ]
    rel = ProbRelation("segments", seg.SEGMENT_SCHEMA)
    rel.insert_rows(rows)
    return segments, rel


def eval_stage(
    predictions: ProbRelation,
    segments: list[seg.Segment],
    smoothed: ProbRelation,
    truth_labels: Mapping[int, int],
    spine: list[tuple[int, str, float]],
    cfg: PipelineConfig,
    truth_codes: Mapping[int, str] | None = None,
) -> dict:
    """Metrics report: final high-level F at the 30 s window, plus the
    smoothed-BHO candidate hit rates when code truth is available."""
    test_serials = serials_of(spine, lambda s: s.is_test)
    test_spine = [r for r in spine if r[1] in test_serials]
    test_ids = {i for i, _, _ in test_spine}

    final_labels = ev.expand_final(segments)
    truth_on_test = {i: truth_labels[i] for i in test_ids if i in truth_labels}
    final_on_test = {i: final_labels[i] for i in truth_on_test}
    report = ev.f_scores(
        final_on_test,
        truth_on_test,
        test_spine,
        ev.EvalConfig(
            top_k=1, include_null=cfg.include_null, tolerance_seconds=cfg.hl_tolerance
        ),
    )

    hit_rates: dict[int, float] = {}
    if truth_codes is not None:
        ranked = _ranked_codes(smoothed, PropertyKind.BHO, test_ids)
        code_truth = {i: truth_codes[i] for i in test_ids if i in truth_codes}
        for k in (1, 2, 3):
            hit_rates[k] = ev.hit_rate(
                {i: ranked.get(i, []) for i in code_truth},
                code_truth,
                test_spine,
                ev.EvalConfig(
                    top_k=k,
                    include_null=cfg.include_null,
                    tolerance_seconds=cfg.bho_tolerance,
                ),
                null_label="0000",
            )

    full = ev.MetricsReport(
        hit_rates=hit_rates,
        per_activity=report.per_activity,
        weighted_f=report.weighted_f,
        confusion=report.confusion,
    )
    return ev.report_to_dict(full)


def top1_candidates(candidates: ProbRelation) -> ProbRelation:
    """Keep only the single most probable candidate per (instance,
    property), at probability 1: the non-probabilistic baseline input."""
    idx = candidates.schema.index_of
    i_id, i_prop, i_code, i_p = (
        idx("instance_id"),
        idx("property"),
        idx("code"),
        idx("p"),
    )
    best: dict[tuple[int, str], tuple] = {}
    for row in candidates.rows():
        key = (row[i_id], row[i_prop])
        cur = best.get(key)
        if cur is None or (-row[i_p], row[i_code]) < (-cur[i_p], cur[i_code]):
            best[key] = row
    rows = []
    for row in best.values():
        row = list(row)
        row[i_p] = 1.0
        rows.append(tuple(row))
    out = ProbRelation(candidates.name, candidates.schema, candidates.prob_key)
    out.insert_rows(sorted(rows, key=lambda r: (r[i_id], r[i_prop])))
    return out


def baseline_top1_f(
    candidates: ProbRelation,
    lap_table: ax.AxiomTable,
    bho_table: ax.AxiomTable,
    truth_labels: Mapping[int, int],
    spine: list[tuple[int, str, float]],
    cfg: PipelineConfig,
) -> float:
    """Weighted F of the first-choice-only baseline: unsmoothed top-1
    candidates scored per instance, no elimination, no tolerance window."""
    test_serials = serials_of(spine, lambda s: s.is_test)
    test_spine = [r for r in spine if r[1] in test_serials]
    preds = inf.predict_all(
        top1_candidates(candidates),
        bho_table,
        lap_table,
        cfg.weights,
        test_spine,
        cfg.strict_pairs,
    )
    idx = preds.schema.index_of
    pred_labels = {
        row[idx("instance_id")]: row[idx("winner")] for row in preds.rows()
    }
    truth_on_test = {i: truth_labels[i] for i in pred_labels if i in truth_labels}
    report = ev.f_scores(
        {i: pred_labels[i] for i in truth_on_test},
        truth_on_test,
        test_spine,
        ev.EvalConfig(top_k=1, include_null=cfg.include_null, tolerance_seconds=0.0),
    )
    return report.weighted_f


def _ranked_codes(
    candidates: ProbRelation, prop: PropertyKind, ids: set[int]
) -> dict[int, list[str]]:
    idx = candidates.schema.index_of
    i_id, i_prop, i_code, i_p = (
        idx("instance_id"),
        idx("property"),
        idx("code"),
        idx("p"),
    )
    per: dict[int, list[tuple[float, str]]] = {}
    for row in candidates.rows():
        if row[i_prop] == prop.value and row[i_id] in ids:
            per.setdefault(row[i_id], []).append((-row[i_p], row[i_code]))
    return {i: [code for _, code in sorted(pairs)] for i, pairs in per.items()}


# ---------------------------------------------------------------------------
# Full pipeline

def run_pipeline(
    cfg: PipelineConfig,
    workspace: str | Path,
    dataset: sc.Dataset | None = None,
) -> RunRecord:
    """gen (unless a dataset or ingested workspace is supplied) ->
    smooth -> learn -> infer -> segment -> eval; writes everything into
    the workspace and returns the run record."""
    ws = Workspace(workspace)
    timings: dict[str, StageTiming] = {}
    t_total = time.perf_counter()

    truth_codes: Mapping[int, str] | None = None
    if dataset is None and ws.has("candidates") and ws.has("instances"):
        instances = ws.load_relation("instances")
        candidates = ws.load_relation("candidates")
        labels = ws.load_relation("labels")
        truth_rel = ws.load_relation("truth") if ws.has("truth") else None
        truth_labels = (
            {r[0]: r[1] for r in truth_rel.rows()} if truth_rel is not None else {}
        )
        if ws.has("truth_codes"):
            codes_rel = ws.load_relation("truth_codes")
            truth_codes = {r[0]: r[2] for r in codes_rel.rows()}
    else:
        t0 = time.perf_counter()
        if dataset is None:
            dataset = sc.generate(scenario_config(cfg))
        instances, candidates, labels = (
            dataset.instances,
            dataset.candidates,
            dataset.labels,
        )
        truth_labels = dataset.truth.activity
        truth_codes = dataset.truth.bho
        timings["generate"] = StageTiming(time.perf_counter() - t0, 0.0)
        ws.save_relation("instances", instances)
        ws.save_relation("candidates", candidates)
        ws.save_relation("labels", labels)
        ws.save_relation("truth", sc.truth_labels_relation(dataset.truth))
        ws.save_relation("truth_codes", sc.truth_codes_relation(dataset.truth))

    spine = spine_of(instances)

    smoothed, smooth_timings = smooth_stage(candidates, spine, cfg)
    timings.update(smooth_timings)
    ws.save_relation("smoothed", smoothed)

    t0 = time.perf_counter()
    lap_table, bho_table = learn_stage(smoothed, labels, spine, cfg)
    timings["learn"] = StageTiming(time.perf_counter() - t0, 0.0)
    ws.save_axioms(lap_table)
    ws.save_axioms(bho_table)

    t0 = time.perf_counter()
    predictions = infer_stage(smoothed, lap_table, bho_table, spine, cfg)
    timings["infer"] = StageTiming(time.perf_counter() - t0, 0.0)
    ws.save_relation("predictions", predictions)

    test_serials = serials_of(spine, lambda s: s.is_test)
    test_seconds = sum(
        secs for s, secs in _serial_seconds(spine).items() if s in test_serials
    )

    t0 = time.perf_counter()
    segments, seg_rel = segment_stage(predictions, cfg)
    timings["eliminate"] = StageTiming(time.perf_counter() - t0, test_seconds)
    ws.save_relation("segments", seg_rel)

    t0 = time.perf_counter()
    report = eval_stage(
        predictions, segments, smoothed, truth_labels, spine, cfg, truth_codes
    )
    timings["eval"] = StageTiming(time.perf_counter() - t0, 0.0)
    ws.save_json("report", report)

    record = RunRecord(
        run_id=uuid.uuid4().hex[:12],
        config=cfg.to_dict(),
        timings=timings,
        data_seconds=test_seconds,
        total_seconds=time.perf_counter() - t_total,
        report=report,
    )
    ws.save_json("run_record", record.to_dict())
    return record


def run_inference_chain(
    cfg: PipelineConfig,
    workspace: str | Path,
    lap_table: ax.AxiomTable,
    bho_table: ax.AxiomTable,
) -> RunRecord:
    """Re-score a prepared workspace with the given axiom tables:
    infer -> segment -> eval. Used by the service after axiom edits."""
    ws = Workspace(workspace)
    instances = ws.load_relation("instances")
    smoothed = ws.load_relation("smoothed")
    truth_rel = ws.load_relation("truth") if ws.has("truth") else None
    truth_labels = {r[0]: r[1] for r in truth_rel.rows()} if truth_rel else {}
    truth_codes = None
    if ws.has("truth_codes"):
        codes_rel = ws.load_relation("truth_codes")
        truth_codes = {r[0]: r[2] for r in codes_rel.rows()}

    spine = spine_of(instances)
    timings: dict[str, StageTiming] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    predictions = infer_stage(smoothed, lap_table, bho_table, spine, cfg)
    timings["infer"] = StageTiming(time.perf_counter() - t0, 0.0)
    ws.save_relation("predictions", predictions)

    test_serials = serials_of(spine, lambda s: s.is_test)
    test_seconds = sum(
        secs for s, secs in _serial_seconds(spine).items() if s in test_serials
    )
    t0 = time.perf_counter()
    segments, seg_rel = segment_stage(predictions, cfg)
    timings["eliminate"] = StageTiming(time.perf_counter() - t0, test_seconds)
    ws.save_relation("segments", seg_rel)

    t0 = time.perf_counter()
    report = eval_stage(
        predictions, segments, smoothed, truth_labels, spine, cfg, truth_codes
    )
    timings["eval"] = StageTiming(time.perf_counter() - t0, 0.0)
    ws.save_json("report", report)

    record = RunRecord(
        run_id=uuid.uuid4().hex[:12],
        config=cfg.to_dict(),
        timings=timings,
        data_seconds=test_seconds,
        total_seconds=time.perf_counter() - t_total,
        report=report,
    )
    ws.save_json("run_record", record.to_dict())
    return record


def build_store(
    instances: ProbRelation,
    candidates: ProbRelation,
    labels: ProbRelation,
    cfg: PipelineConfig,
) -> RelStore:
    """Base relations plus the registered view chain, one view per
    population step: candidates -> smoothed -> predictions -> segments.
    Editing a base relation invalidates everything downstream."""
    store = RelStore()
    store.add(instances.copy_as("instances"))
    store.add(candidates.copy_as("candidates"))
    store.add(labels.copy_as("labels"))

    def smooth_view(cand: ProbRelation, inst: ProbRelation) -> ProbRelation:
        out, _ = smooth_stage(cand, spine_of(inst), cfg)
        return out

    def predict_view(
        smoothed: ProbRelation, inst: ProbRelation, labels_rel: ProbRelation
    ) -> ProbRelation:
        spine = spine_of(inst)
        lap_table, bho_table = learn_stage(smoothed, labels_rel, spine, cfg)
        return infer_stage(smoothed, lap_table, bho_table, spine, cfg)

    def segment_view(predictions: ProbRelation) -> ProbRelation:
        _, rel = segment_stage(predictions, cfg)
        return rel

    store.register_view(ViewDef("smoothed", ("candidates", "instances"), smooth_view))
    store.register_view(
        ViewDef("predictions", ("smoothed", "instances", "labels"), predict_view)
    )
    store.register_view(ViewDef("segments", ("predictions",), segment_view))
    return store
