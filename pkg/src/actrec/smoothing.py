"""Windowed smoothing of categorical probability streams.

The probabilistic mode of a window of candidate distributions assigns
each domain value the average of its per-member probabilities. It
generalizes the counting mode: feed it deterministic members (one
value at probability 1 each) and the top value of the result is the
majority value. Open-world mass is deliberately ignored and the result
is not renormalized, so the output mass equals the mean of the input
masses.

smooth_candidates applies the operator over a sliding window of
2k+1 instances, clipped at serial boundaries where the divisor shrinks
to the actual window length, then re-prunes each instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .codes import PRUNE_CAP, PRUNE_FLOOR, PropertyKind, prune_candidates
from .errors import InvalidConfig
from .relstore import ProbRelation, Schema

CANDIDATE_SCHEMA = Schema.of(
    ("instance_id", "integer"),
    ("serial", "text"),
    ("t_start", "real"),
    ("property", "text"),
    ("code", "text"),
    ("p", "probability"),
)
CANDIDATE_KEY = ("instance_id", "property")


@dataclass(frozen=True)
class SmoothingConfig:
    prop: PropertyKind
    half_width: int
    renormalize: bool = False

    def __post_init__(self):
        if not 1 <= self.half_width <= 10:
            raise InvalidConfig(f"half_width {self.half_width} outside 1..10")


def probabilistic_mode(
    dists: Sequence[Mapping[Hashable, float]],
) -> dict[Hashable, float]:
    """Average the probability of every domain value across ``dists``.

    Values whose averaged probability is 0 are omitted. Raises on an
    empty argument list.
    """
    if not dists:
        raise InvalidConfig("probabilistic mode of an empty argument list")
    n = len(dists)
    sums: dict[Hashable, float] = {}
    for dist in dists:
        for value, p in dist.items():
            sums[value] = sums.get(value, 0.0) + p
    return {value: total / n for value, total in sums.items() if total > 0.0}


def _renormalized(dist: dict) -> dict:
    mass = sum(dist.values())
    if mass <= 0.0:
        return dist
    return {v: p / mass for v, p in dist.items()}


def smooth_candidates(
    rel: ProbRelation,
    cfg: SmoothingConfig,
    spine: Iterable[tuple[int, str, float]] | None = None,
    serials: set[str] | None = None,
    cap: int = PRUNE_CAP,
    floor: float = PRUNE_FLOOR,
) -> ProbRelation:
    """Replace each instance's candidates with the probabilistic mode of
    the instances in [i-k, i+k], clipped to the same serial.

    ``spine`` lists every ``(instance_id, serial, t_start)`` of the
    dataset: it fixes window lengths at serial edges, lets instances
    whose observation was dropped regain candidates from their
    neighbors, and supplies their timestamps. Without it the spine is
    reconstructed from the candidate rows themselves.

    Rows of other properties, and of serials outside ``serials`` when
    given, pass through unchanged.
    """
    kind = cfg.prop.value
    idx = {name: rel.schema.index_of(name) for name in rel.schema.names}
    i_id, i_ser, i_t = idx["instance_id"], idx["serial"], idx["t_start"]
    i_prop, i_code, i_p = idx["property"], idx["code"], idx["p"]

    passthrough: list[tuple] = []
    per_serial: dict[str, dict[int, dict[str, float]]] = {}
    times: dict[int, float] = {}
    for row in rel.rows():
        if row[i_prop] != kind or (serials is not None and row[i_ser] not in serials):
            passthrough.append(row)
            continue
        per_serial.setdefault(row[i_ser], {}).setdefault(row[i_id], {})[
            row[i_code]
        ] = row[i_p]
        times[row[i_id]] = row[i_t]

    extents: dict[str, tuple[int, int]] = {}
    if spine is not None:
        for inst, serial, t in spine:
            times[inst] = t
            lo, hi = extents.get(serial, (inst, inst))
            extents[serial] = (min(lo, inst), max(hi, inst))
            if serial not in per_serial and (serials is None or serial in serials):
                per_serial.setdefault(serial, {})

    k = cfg.half_width
    out_rows: list[tuple] = []
    for serial in sorted(per_serial):
        by_instance = per_serial[serial]
        if serial in extents:
            lo, hi = extents[serial]
        elif by_instance:
            lo, hi = min(by_instance), max(by_instance)
        else:
            continue
        for inst in range(lo, hi + 1):
            a, b = max(lo, inst - k), min(hi, inst + k)
            n = b - a + 1
            sums: dict[str, float] = {}
            for j in range(a, b + 1):
                for code, p in by_instance.get(j, {}).items():
                    sums[code] = sums.get(code, 0.0) + p
            smoothed = {code: total / n for code, total in sums.items() if total > 0.0}
            if cfg.renormalize:
                smoothed = _renormalized(smoothed)
            pruned = prune_candidates(
                inst, cfg.prop, list(smoothed.items()), cap=cap, floor=floor
            )
            t = times.get(inst)
            if t is None:
                # No spine and no raw rows for this id: nothing to emit.
                continue
            for code, p in pruned.candidates:
                out_rows.append((inst, serial, t, kind, code, p))

    out = ProbRelation(rel.name, rel.schema, rel.prob_key)
    out.insert_rows(
        sorted(passthrough + out_rows, key=lambda r: (r[i_id], r[i_prop], r[i_code]))
    )
    return out
