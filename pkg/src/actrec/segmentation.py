"""Timeline compaction: run-length merging plus three-step elimination.

Consecutive instances sharing a predicted activity collapse into one
segment whose length is the id span. Short segments are then deleted
in three passes with rising thresholds (default 15, 35, 55 instances);
after each pass the freed span is absorbed by the preceding surviving
segment (or the following one at the serial head) and equal neighbors
merge. A pass that would delete everything instead keeps the single
longest segment, stretched over the whole serial, and stops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidConfig
from .relstore import Schema

INSTANCES_PER_SECOND = 3

SEGMENT_SCHEMA = Schema.of(
    ("serial", "text"),
    ("start_id", "integer"),
    ("t_start", "real"),
    ("activity", "integer"),
    ("length_instances", "integer"),
    ("length_seconds", "real"),
)

DEFAULT_THRESHOLDS = (15, 35, 55)


@dataclass(frozen=True)
class Segment:
    start_id: int
    serial: str
    t_start: float
    activity: int
    length_instances: int

    @property
    def length_seconds(self) -> float:
        return self.length_instances / INSTANCES_PER_SECOND

    @property
    def end_id(self) -> int:
        return self.start_id + self.length_instances - 1


@dataclass(frozen=True)
class EliminationConfig:
    thresholds: tuple[int, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        if not self.thresholds or any(t <= 0 for t in self.thresholds):
            raise InvalidConfig(f"thresholds must be positive: {self.thresholds}")
        if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise InvalidConfig(f"thresholds must be strictly increasing: {self.thresholds}")


def rearrange(
    labeled: Sequence[tuple[int, float, int]], serial: str
) -> list[Segment]:
    """Collapse maximal runs of equal activity into segments.

    ``labeled`` is (instance_id, t_start, activity) ordered by id for a
    single serial; a segment's length runs to the next segment's start,
    the last one to the final id inclusive.
    """
    if not labeled:
        return []
    segments: list[Segment] = []
    run_start = 0
    for i in range(1, len(labeled) + 1):
        if i == len(labeled) or labeled[i][2] != labeled[run_start][2]:
            start_id, t, activity = labeled[run_start]
            if i < len(labeled):
                length = labeled[i][0] - start_id
            else:
                length = labeled[-1][0] - start_id + 1
            segments.append(Segment(start_id, serial, t, activity, length))
            run_start = i
    return segments


def _merge_equal(segments: list[Segment]) -> list[Segment]:
    merged: list[Segment] = []
    for seg in segments:
        if merged and merged[-1].activity == seg.activity:
            prev = merged[-1]
            merged[-1] = Segment(
                prev.start_id,
                prev.serial,
                prev.t_start,
                prev.activity,
                prev.length_instances + seg.length_instances,
            )
        else:
            merged.append(seg)
    return merged


def three_step_eliminate(
    segments: list[Segment], cfg: EliminationConfig = EliminationConfig()
) -> list[Segment]:
    """Delete short segments at each threshold, re-absorbing the span.

    Deleted spans extend the preceding surviving segment forward;
    deletions at the serial head are absorbed backward by the first
    survivor. If a pass leaves no survivors the longest segment
    (earliest on ties) is kept spanning the serial and processing
    stops.
    """
    if not segments:
        return []
    serial = segments[0].serial
    first_id = segments[0].start_id
    total = sum(s.length_instances for s in segments)
    first_t = segments[0].t_start

    current = _merge_equal(list(segments))
    for threshold in cfg.thresholds:
        survivors = [s for s in current if s.length_instances >= threshold]
        if not survivors:
            longest = max(current, key=lambda s: s.length_instances)
            return [Segment(first_id, serial, first_t, longest.activity, total)]
        rebuilt: list[Segment] = []
        for i, seg in enumerate(survivors):
            start = first_id if i == 0 else seg.start_id
            t = first_t if i == 0 else seg.t_start
            end = (
                survivors[i + 1].start_id - 1
                if i + 1 < len(survivors)
                else first_id + total - 1
            )
            rebuilt.append(Segment(start, serial, t, seg.activity, end - start + 1))
        current = _merge_equal(rebuilt)
    return current
