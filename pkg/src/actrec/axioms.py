"""Assertion axioms: learned from labeled training runs, edited by hand.

An axiom row maps an observed code (a LAP or BHO render) to one
probability per high-level activity, estimated by conditional
frequency with add-one smoothing:

    p_a(c) = (count(a and c) + 1) / (count(c) + D)

where D defaults to the training-set size. The five probabilities of a
row may sum to less than one; the remainder is the null/idle mass.
Codes never seen in training get no row and contribute nothing at
inference time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

from .codes import ACTIVITIES, MASS_EPS, NULL_CODE, PropertyKind
from .errors import ConstraintViolation, EmptyTrainingSet
from .relstore import ProbRelation, Schema

TRUTH_SCHEMA = Schema.of(("instance_id", "integer"), ("code", "text"))
LABEL_SCHEMA = Schema.of(("instance_id", "integer"), ("activity", "integer"))

_ACTIVITY_FIELDS = tuple(f"p{int(a)}" for a in ACTIVITIES)


@dataclass(frozen=True)
class AxiomRow:
    code: str
    probs: Mapping[int, float]  # activity code (101..105) -> probability
    provenance: str = "learned"

    def __post_init__(self):
        object.__setattr__(
            self, "probs", {int(a): float(self.probs.get(int(a), 0.0)) for a in ACTIVITIES}
        )
        if self.provenance not in ("learned", "manual"):
            raise ConstraintViolation(f"bad provenance {self.provenance!r}")
        for a, p in self.probs.items():
            if not 0.0 <= p <= 1.0:
                raise ConstraintViolation(
                    f"axiom {self.code}: p{a}={p} outside [0, 1]", [(self.code, p)]
                )
        mass = sum(self.probs.values())
        if mass > 1.0 + MASS_EPS:
            raise ConstraintViolation(
                f"axiom {self.code}: activity mass {mass:.6f} exceeds 1",
                [(self.code, mass)],
            )

    @property
    def mass(self) -> float:
        return sum(self.probs.values())


@dataclass(frozen=True)
class AxiomTable:
    prop: PropertyKind
    rows: Mapping[str, AxiomRow]
    training_size: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rows", dict(self.rows))

    def get(self, code: str) -> AxiomRow | None:
        return self.rows.get(code)

    def __len__(self) -> int:
        return len(self.rows)


def prepare_truth(
    candidates: ProbRelation,
    prop: PropertyKind,
    instance_ids: Iterable[int],
    serials: set[str] | None = None,
) -> dict[int, str]:
    """Most probable code per instance (ties by ascending render).

    Instances in ``instance_ids`` with no candidates map to the null
    code "0000". For LAP this supplies the training truth the dataset
    never labeled; for BHO it simply reads back the deterministic rows.
    """
    idx = candidates.schema.index_of
    i_id, i_ser = idx("instance_id"), idx("serial")
    i_prop, i_code, i_p = idx("property"), idx("code"), idx("p")
    best: dict[int, tuple[float, str]] = {}
    for row in candidates.rows():
        if row[i_prop] != prop.value:
            continue
        if serials is not None and row[i_ser] not in serials:
            continue
        inst, code, p = row[i_id], row[i_code], row[i_p]
        cur = best.get(inst)
        if cur is None or (-p, code) < (-cur[0], cur[1]):
            best[inst] = (p, code)
    return {
        inst: best[inst][1] if inst in best else NULL_CODE for inst in instance_ids
    }


def learn_axioms(
    truth: Mapping[int, str],
    labels: Mapping[int, int],
    prop: PropertyKind,
    smoothing_denominator: int | None = None,
) -> AxiomTable:
    """Estimate one axiom row per code present in the joined corpus.

    ``truth`` maps training instances to observed codes, ``labels`` to
    high-level activities; the join is on instance id. Null-labeled
    instances count toward N and count(c) but feed no activity mass.
    """
    joined = [(code, labels[inst]) for inst, code in truth.items() if inst in labels]
    n_train = len(joined)
    if n_train == 0:
        raise EmptyTrainingSet(f"no joined {prop.value} training instances")
    denom_base = smoothing_denominator if smoothing_denominator is not None else n_train

    code_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, int], int] = {}
    for code, activity in joined:
        code_counts[code] = code_counts.get(code, 0) + 1
        if activity != 0:
            key = (code, activity)
            pair_counts[key] = pair_counts.get(key, 0) + 1

    rows = {}
    for code, n_code in code_counts.items():
        denom = n_code + denom_base
        probs = {
            int(a): (pair_counts.get((code, int(a)), 0) + 1) / denom for a in ACTIVITIES
        }
        rows[code] = AxiomRow(code, probs, "learned")
    return AxiomTable(prop, rows, n_train)


def apply_manual_overrides(table: AxiomTable, edits: Iterable[AxiomRow]) -> AxiomTable:
    """Replace or insert rows as manual; reject the whole batch if any
    edit breaks the row constraints (the table is left unchanged)."""
    edits = list(edits)
    offending = []
    for edit in edits:
        mass = sum(edit.probs.values())
        if mass > 1.0 + MASS_EPS:
            offending.append((edit.code, mass))
    if offending:
        raise ConstraintViolation(
            f"{len(offending)} edit(s) exceed unit mass", offending
        )
    rows = dict(table.rows)
    for edit in edits:
        rows[edit.code] = replace(edit, provenance="manual")
    return AxiomTable(table.prop, rows, table.training_size)


# ---------------------------------------------------------------------------
# Persistence: {property, training_size, rows:[{code, p101..p105, provenance}]}

def table_to_dict(table: AxiomTable) -> dict:
    rows = []
    for code in sorted(table.rows):
        row = table.rows[code]
        entry: dict = {"code": code}
        for a, f in zip(ACTIVITIES, _ACTIVITY_FIELDS):
            entry[f] = row.probs[int(a)]
        entry["provenance"] = row.provenance
        rows.append(entry)
    return {
        "property": table.prop.value,
        "training_size": table.training_size,
        "rows": rows,
    }


def table_from_dict(doc: dict) -> AxiomTable:
    prop = PropertyKind(doc["property"])
    rows = {}
    for entry in doc["rows"]:
        probs = {int(a): entry[f] for a, f in zip(ACTIVITIES, _ACTIVITY_FIELDS)}
        rows[entry["code"]] = AxiomRow(entry["code"], probs, entry["provenance"])
    return AxiomTable(prop, rows, int(doc["training_size"]))


def save_axioms(table: AxiomTable, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(table_to_dict(table), indent=2) + "\n", encoding="utf-8"
    )


def load_axioms(path: str | Path) -> AxiomTable:
    """Load and revalidate; tampered rows raise ConstraintViolation."""
    return table_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
