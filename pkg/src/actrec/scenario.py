"""Deterministic synthetic dataset generator.

Each subject performs a scripted morning routine several times: three
training runs plus a drill (runs 1, 2, 3, 9) and two test runs (4, 5)
at three instances per second. Per activity, LAP and BHO codes are
drawn from small emission tables; a noise profile then decides whether
the true code leads the emitted candidate set or is demoted behind a
confusable neighbor, and whether the observation is dropped entirely.

Training runs carry deterministic BHO candidates and high-level
labels; test runs carry noisy candidates only. Ground truth for every
instance is returned for evaluation.

Determinism contract: all draws go through ``random.Random.random()``
seeded per run, so one seed yields one byte-identical dataset on any
platform.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .codes import (
    Activity,
    PropertyKind,
    SerialCode,
    encode_bho,
    encode_lap,
    BhoCode,
    LapCode,
    Posture,
)
from .errors import InvalidConfig
from .relstore import ProbRelation, Schema, relation_from_rows
from .smoothing import CANDIDATE_KEY, CANDIDATE_SCHEMA

INSTANCES_PER_SECOND = 3

INSTANCE_SCHEMA = Schema.of(
    ("instance_id", "integer"), ("serial", "text"), ("t_start", "real")
)
LABEL_SCHEMA = Schema.of(("instance_id", "integer"), ("activity", "integer"))
TRUTH_CODES_SCHEMA = Schema.of(
    ("instance_id", "integer"), ("lap", "text"), ("bho", "text")
)

# Environmental objects; 0 is idle. Fridge sits at 20 so the rendered
# code 2000 reads "right hand on the fridge, left hand idle".
OBJECT_NAMES = {
    0: "idle",
    1: "cup",
    2: "glass",
    3: "plate",
    4: "knife",
    5: "spoon",
    6: "fork",
    7: "bread",
    8: "cheese",
    9: "salami",
    10: "sugar",
    11: "milk",
    12: "water bottle",
    13: "juice",
    14: "coffee machine",
    15: "dishwasher",
    16: "drawer 1",
    17: "drawer 2",
    18: "drawer 3",
    19: "door",
    20: "fridge",
    21: "table",
    22: "chair",
    23: "lazy chair",
}


def _lap(x: int, y: int, sextant: int, posture: Posture) -> str:
    return encode_lap(LapCode(x, y, sextant, posture))


def _bho(right: int, left: int) -> str:
    return encode_bho(BhoCode(right, left))


def default_schedule() -> tuple[tuple[int, float], ...]:
    """Morning routine, 30 minutes per run."""
    return (
        (int(Activity.MORNING), 420.0),
        (int(Activity.COFFEE), 360.0),
        (int(Activity.SANDWICH), 420.0),
        (int(Activity.CLEANUP), 300.0),
        (int(Activity.RELAX), 300.0),
    )


def default_emissions() -> dict[int, tuple[dict[str, float], dict[str, float]]]:
    """Per activity: (LAP code distribution, BHO code distribution).

    Supports are disjoint across activities so that a noise-free
    dataset is perfectly recoverable.
    """
    return {
        int(Activity.MORNING): (
            {
                _lap(2, 2, 0, Posture.STAND): 0.5,
                _lap(2, 3, 1, Posture.WALK): 0.3,
                _lap(3, 2, 0, Posture.STAND): 0.2,
            },
            {_bho(20, 0): 0.4, _bho(11, 0): 0.3, _bho(16, 0): 0.3},
        ),
        int(Activity.COFFEE): (
            {
                _lap(5, 3, 2, Posture.SIT): 0.6,
                _lap(5, 4, 2, Posture.STAND): 0.4,
            },
            {_bho(1, 0): 0.5, _bho(14, 1): 0.3, _bho(10, 5): 0.2},
        ),
        int(Activity.SANDWICH): (
            {
                _lap(6, 6, 3, Posture.SIT): 0.5,
                _lap(7, 6, 3, Posture.STAND): 0.3,
                _lap(6, 7, 4, Posture.SIT): 0.2,
            },
            {_bho(4, 7): 0.4, _bho(7, 8): 0.3, _bho(3, 9): 0.3},
        ),
        int(Activity.CLEANUP): (
            {
                _lap(4, 5, 5, Posture.WALK): 0.6,
                _lap(3, 5, 5, Posture.STAND): 0.4,
            },
            {_bho(15, 3): 0.5, _bho(2, 15): 0.3, _bho(18, 0): 0.2},
        ),
        int(Activity.RELAX): (
            {
                _lap(8, 8, 1, Posture.LIE): 0.7,
                _lap(8, 7, 1, Posture.SIT): 0.3,
            },
            {_bho(0, 0): 0.8, _bho(13, 0): 0.2},
        ),
    }


@dataclass(frozen=True)
class NoiseProfile:
    """p_correct_top: chance the true code is the emitted top candidate;
    confusion_spread: how many confusable codes share the rest;
    null_rate: chance the observation is dropped entirely."""

    p_correct_top: float = 1.0
    confusion_spread: int = 2
    null_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_correct_top <= 1.0:
            raise InvalidConfig(f"p_correct_top {self.p_correct_top} outside [0, 1]")
        if not 0.0 <= self.null_rate <= 1.0:
            raise InvalidConfig(f"null_rate {self.null_rate} outside [0, 1]")
        if self.confusion_spread < 1:
            raise InvalidConfig("confusion_spread must be >= 1")

    @property
    def noiseless(self) -> bool:
        return self.p_correct_top >= 1.0 and self.null_rate == 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 42
    subjects: int = 2
    training_runs: tuple[int, ...] = (1, 2, 3, 9)
    test_runs: tuple[int, ...] = (4, 5)
    schedule: tuple[tuple[int, float], ...] = field(default_factory=default_schedule)
    emissions: Mapping[int, tuple[dict, dict]] = field(default_factory=default_emissions)
    lap_noise: NoiseProfile = NoiseProfile()
    bho_noise: NoiseProfile = NoiseProfile()

    def __post_init__(self):
        if self.subjects < 1 or self.subjects > 9:
            raise InvalidConfig(f"subjects {self.subjects} outside 1..9")
        if not self.schedule or any(d <= 0 for _, d in self.schedule):
            raise InvalidConfig("schedule durations must be positive")
        for activity, _ in self.schedule:
            if activity not in self.emissions:
                raise InvalidConfig(f"no emission table for activity {activity}")
        for activity, (lap_dist, bho_dist) in self.emissions.items():
            for name, dist in (("LAP", lap_dist), ("BHO", bho_dist)):
                if abs(sum(dist.values()) - 1.0) > 1e-9:
                    raise InvalidConfig(
                        f"{name} emissions for activity {activity} do not sum to 1"
                    )

    @property
    def run_seconds(self) -> float:
        return sum(d for _, d in self.schedule)

    def with_noise(self, lap: NoiseProfile, bho: NoiseProfile) -> "ScenarioConfig":
        return ScenarioConfig(
            seed=self.seed,
            subjects=self.subjects,
            training_runs=self.training_runs,
            test_runs=self.test_runs,
            schedule=self.schedule,
            emissions=self.emissions,
            lap_noise=lap,
            bho_noise=bho,
        )


@dataclass(frozen=True)
class GroundTruth:
    """Per-instance truth, aligned 1:1 with the emitted instances."""

    activity: dict[int, int]
    lap: dict[int, str]
    bho: dict[int, str]


@dataclass(frozen=True)
class Dataset:
    instances: ProbRelation     # (instance_id, serial, t_start)
    candidates: ProbRelation    # candidate schema, prob-key (instance, property)
    labels: ProbRelation        # training high-level labels
    truth: GroundTruth
    config: ScenarioConfig


def _sample(rng: random.Random, dist: Sequence[tuple[str, float]]) -> str:
    """Inverse-CDF draw over a pre-sorted support, using only rng.random()."""
    u = rng.random()
    acc = 0.0
    for value, p in dist:
        acc += p
        if u < acc:
            return value
    return dist[-1][0]


def _confusables(code: str, prop: PropertyKind, rng: random.Random, count: int) -> list[str]:
    """Nearby-but-wrong codes: adjacent grid cells for LAP, other objects
    for BHO. Deterministic given the rng state."""
    out: list[str] = []
    if prop is PropertyKind.LAP:
        x, y = int(code[0]), int(code[1])
        rest = code[2:]
        deltas = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)]
        for dx, dy in deltas:
            nx, ny = x + dx, y + dy
            if 1 <= nx <= 8 and 1 <= ny <= 8:
                out.append(f"{nx}{ny}{rest}")
            if len(out) >= count:
                break
        while len(out) < count:
            nx = 1 + int(rng.random() * 8)
            ny = 1 + int(rng.random() * 8)
            cand = f"{nx}{ny}{rest}"
            if cand != code and cand not in out:
                out.append(cand)
    else:
        right, left = int(code[:2]), int(code[2:])
        while len(out) < count:
            nr = int(rng.random() * 24)
            cand = f"{nr * 100 + left:04d}"
            if cand != code and cand not in out:
                out.append(cand)
            else:
                nl = int(rng.random() * 24)
                cand = f"{right * 100 + nl:04d}"
                if cand != code and cand not in out:
                    out.append(cand)
    return out[:count]


def _emit_candidates(
    true_code: str, prop: PropertyKind, noise: NoiseProfile, rng: random.Random
) -> list[tuple[str, float]]:
    if noise.noiseless:
        return [(true_code, 1.0)]
    if rng.random() < noise.null_rate:
        return []
    confusables = _confusables(true_code, prop, rng, noise.confusion_spread)
    if rng.random() < noise.p_correct_top:
        ladder = [0.7, 0.15, 0.05]
        ordered = [true_code] + confusables
    else:
        ladder = [0.45, 0.35, 0.10]
        ordered = [confusables[0], true_code] + confusables[1:]
    return [(c, p) for c, p in zip(ordered, ladder)]


def generate(cfg: ScenarioConfig) -> Dataset:
    """Produce the dataset deterministically from cfg.seed."""
    instance_rows: list[tuple] = []
    candidate_rows: list[tuple] = []
    label_rows: list[tuple] = []
    truth_activity: dict[int, int] = {}
    truth_lap: dict[int, str] = {}
    truth_bho: dict[int, str] = {}

    emissions_sorted = {
        a: (sorted(lap.items()), sorted(bho.items()))
        for a, (lap, bho) in cfg.emissions.items()
    }

    next_id = 1
    for subject in range(1, cfg.subjects + 1):
        for run in (*cfg.training_runs, *cfg.test_runs):
            serial = SerialCode(subject, run)
            rng = random.Random(f"{cfg.seed}:{serial.render()}")
            is_training = serial.is_training
            n_instances = int(round(cfg.run_seconds * INSTANCES_PER_SECOND))

            timeline: list[int] = []
            for activity, duration in cfg.schedule:
                timeline.extend([activity] * int(round(duration * INSTANCES_PER_SECOND)))
            timeline = timeline[:n_instances]

            for offset, activity in enumerate(timeline):
                inst = next_id + offset
                t = offset / INSTANCES_PER_SECOND
                instance_rows.append((inst, serial.render(), t))
                lap_dist, bho_dist = emissions_sorted[activity]
                true_lap = _sample(rng, lap_dist)
                true_bho = _sample(rng, bho_dist)
                truth_activity[inst] = activity
                truth_lap[inst] = true_lap
                truth_bho[inst] = true_bho

                for code, p in _emit_candidates(
                    true_lap, PropertyKind.LAP, cfg.lap_noise, rng
                ):
                    candidate_rows.append((inst, serial.render(), t, "LAP", code, p))

                if is_training:
                    candidate_rows.append((inst, serial.render(), t, "BHO", true_bho, 1.0))
                    label_rows.append((inst, activity))
                else:
                    for code, p in _emit_candidates(
                        true_bho, PropertyKind.BHO, cfg.bho_noise, rng
                    ):
                        candidate_rows.append((inst, serial.render(), t, "BHO", code, p))
            next_id += len(timeline)

    return Dataset(
        instances=relation_from_rows("instances", INSTANCE_SCHEMA, instance_rows),
        candidates=relation_from_rows(
            "candidates", CANDIDATE_SCHEMA, candidate_rows, CANDIDATE_KEY
        ),
        labels=relation_from_rows("labels", LABEL_SCHEMA, label_rows),
        truth=GroundTruth(truth_activity, truth_lap, truth_bho),
        config=cfg,
    )


def truth_codes_relation(truth: GroundTruth) -> ProbRelation:
    rows = [
        (inst, truth.lap[inst], truth.bho[inst]) for inst in sorted(truth.activity)
    ]
    return relation_from_rows("truth_codes", TRUTH_CODES_SCHEMA, rows)


def truth_labels_relation(truth: GroundTruth) -> ProbRelation:
    rows = [(inst, truth.activity[inst]) for inst in sorted(truth.activity)]
    return relation_from_rows("truth", LABEL_SCHEMA, rows)
