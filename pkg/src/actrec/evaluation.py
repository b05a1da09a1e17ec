"""Metrics: top-k hit rate and per-activity F-scores, both with a
boundary tolerance window.

Labels near activity boundaries are fuzzy: the annotator and the
system may disagree by a few seconds on where one activity ends. A
prediction therefore counts as correct when a matching truth label
exists anywhere within +-tolerance seconds in the same serial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .codes import ACTIVITIES, Activity
from .errors import GapInTiling, InstanceMismatch, InvalidConfig
from .segmentation import Segment

_TIME_EPS = 1e-9


@dataclass(frozen=True)
class EvalConfig:
    top_k: int = 1
    include_null: bool = True
    tolerance_seconds: float = 0.0

    def __post_init__(self):
        if not 1 <= self.top_k <= 3:
            raise InvalidConfig(f"top_k {self.top_k} outside 1..3")
        if self.tolerance_seconds < 0:
            raise InvalidConfig(f"negative tolerance {self.tolerance_seconds}")


@dataclass(frozen=True)
class ActivityScore:
    code: int
    precision: float
    recall: float
    f: float


@dataclass(frozen=True)
class MetricsReport:
    hit_rates: dict[int, float]          # k -> rate
    per_activity: tuple[ActivityScore, ...]
    weighted_f: float
    confusion: tuple[tuple[int, ...], ...]  # rows=truth, cols=pred, class order below

    CLASS_ORDER = (int(Activity.NULL), *(int(a) for a in ACTIVITIES))


def expand_final(segments: Sequence[Segment]) -> dict[int, int]:
    """Per-instance activity labels from a segment tiling.

    Segments of one serial must tile its id range; a gap or overlap
    raises GapInTiling.
    """
    labels: dict[int, int] = {}
    by_serial: dict[str, list[Segment]] = {}
    for seg in segments:
        by_serial.setdefault(seg.serial, []).append(seg)
    for serial, segs in by_serial.items():
        segs = sorted(segs, key=lambda s: s.start_id)
        expect = segs[0].start_id
        for seg in segs:
            if seg.start_id != expect:
                raise GapInTiling(
                    f"serial {serial}: segment starts at {seg.start_id}, expected {expect}"
                )
            for i in range(seg.start_id, seg.start_id + seg.length_instances):
                labels[i] = seg.activity
            expect = seg.start_id + seg.length_instances
    return labels


def _window_labels(
    spine: Sequence[tuple[int, str, float]],
    truth: Mapping[int, Hashable],
    tolerance: float,
) -> dict[int, set]:
    """Truth labels visible from each instance within the time window."""
    by_serial: dict[str, list[tuple[float, int]]] = {}
    for inst, serial, t in spine:
        if inst in truth:
            by_serial.setdefault(serial, []).append((t, inst))
    windows: dict[int, set] = {}
    for serial, entries in by_serial.items():
        entries.sort()
        times = [t for t, _ in entries]
        insts = [i for _, i in entries]
        lo = 0
        hi = 0
        counts: dict[Hashable, int] = {}
        for pos, (t, inst) in enumerate(entries):
            while hi < len(entries) and times[hi] <= t + tolerance + _TIME_EPS:
                label = truth[insts[hi]]
                counts[label] = counts.get(label, 0) + 1
                hi += 1
            while times[lo] < t - tolerance - _TIME_EPS:
                label = truth[insts[lo]]
                counts[label] -= 1
                if counts[label] == 0:
                    del counts[label]
                lo += 1
            windows[inst] = set(counts)
    return windows


def _check_alignment(preds: Mapping, truth: Mapping) -> None:
    if set(preds) != set(truth):
        missing = set(truth) - set(preds)
        extra = set(preds) - set(truth)
        raise InstanceMismatch(
            f"prediction/truth instance sets differ "
            f"({len(missing)} missing, {len(extra)} extra)"
        )


def hit_rate(
    ranked: Mapping[int, Sequence[Hashable]],
    truth: Mapping[int, Hashable],
    spine: Sequence[tuple[int, str, float]],
    cfg: EvalConfig,
    null_label: Hashable = 0,
) -> float:
    """Fraction of instances whose truth window contains a top-k choice.

    With include_null off, instances whose own truth is the null label
    leave the denominator (their hits are discarded with them).
    """
    _check_alignment(ranked, truth)
    windows = _window_labels(spine, truth, cfg.tolerance_seconds)
    if set(windows) != set(truth):
        raise InstanceMismatch("spine does not cover the evaluated instances")
    hits = 0
    total = 0
    for inst, choices in ranked.items():
        if not cfg.include_null and truth[inst] == null_label:
            continue
        total += 1
        window = windows[inst]
        if any(c in window for c in choices[: cfg.top_k]):
            hits += 1
    return hits / total if total else 0.0


def f_scores(
    preds: Mapping[int, int],
    truth: Mapping[int, int],
    spine: Sequence[tuple[int, str, float]],
    cfg: EvalConfig,
) -> MetricsReport:
    """Per-activity precision/recall/F with the tolerance window applied.

    A prediction matching any truth label in its window is scored
    against that label (effective truth = the prediction itself);
    otherwise against the instance's own truth. Weighted F averages
    the five activity F-scores by effective-truth support.
    """
    _check_alignment(preds, truth)
    windows = _window_labels(spine, truth, cfg.tolerance_seconds)
    if set(windows) != set(truth):
        raise InstanceMismatch("spine does not cover the evaluated instances")
    order = MetricsReport.CLASS_ORDER
    pos = {c: i for i, c in enumerate(order)}
    confusion = [[0] * len(order) for _ in order]
    for inst, p in preds.items():
        t = truth[inst]
        effective = p if p in windows[inst] else t
        confusion[pos[effective]][pos[p]] += 1

    per_activity = []
    weighted_num = 0.0
    support_total = 0
    for a in (int(x) for x in ACTIVITIES):
        i = pos[a]
        tp = confusion[i][i]
        fp = sum(confusion[j][i] for j in range(len(order)) if j != i)
        fn = sum(confusion[i][j] for j in range(len(order)) if j != i)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_activity.append(ActivityScore(a, precision, recall, f))
        support = tp + fn
        weighted_num += f * support
        support_total += support
    weighted_f = weighted_num / support_total if support_total else 0.0

    return MetricsReport(
        hit_rates={},
        per_activity=tuple(per_activity),
        weighted_f=weighted_f,
        confusion=tuple(tuple(row) for row in confusion),
    )


def report_to_dict(report: MetricsReport) -> dict:
    """Wire format: {hit_rate:{k1..k3}, per_activity, weighted_f, confusion}."""
    return {
        "hit_rate": {f"k{k}": report.hit_rates.get(k) for k in (1, 2, 3)},
        "per_activity": [
            {
                "code": s.code,
                "precision": s.precision,
                "recall": s.recall,
                "f": s.f,
            }
            for s in report.per_activity
        ],
        "weighted_f": report.weighted_f,
        "confusion": [list(row) for row in report.confusion],
    }
