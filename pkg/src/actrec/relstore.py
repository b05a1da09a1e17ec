"""Probability-annotated bag-relations with derived views.

A ProbRelation is a named bag of tuples whose schema may designate one
probability column and a list of key columns. For every distinct key
valuation, the probability mass of its rows must stay <= 1 (plus a
small float tolerance); batch inserts are all-or-nothing so a rejected
batch leaves the relation untouched.

A RelStore holds base relations plus registered views (pure transforms
over named inputs). View results are cached against the versions of
the base relations they transitively read; materialized views keep a
stored copy that is served until explicitly invalidated.

Snapshots are CSV (RFC 4180, header row, probabilities at 17
significant digits) with a JSON sidecar carrying name/schema/key.
"""

from __future__ import annotations

import csv
import json
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .codes import MASS_EPS
from .errors import (
    ConstraintViolation,
    CycleDetected,
    SchemaMismatch,
    UnknownRelation,
    UnknownView,
)

COLUMN_KINDS = ("integer", "real", "text", "probability")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaMismatch(f"unknown column kind {self.kind!r}")


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate column names in {names}")
        probs = [c.name for c in self.columns if c.kind == "probability"]
        if len(probs) > 1:
            raise SchemaMismatch(f"more than one probability column: {probs}")

    @classmethod
    def of(cls, *cols: tuple[str, str]) -> "Schema":
        return cls(tuple(Column(n, k) for n, k in cols))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaMismatch(f"no column named {name!r}")

    @property
    def probability_index(self) -> int | None:
        for i, c in enumerate(self.columns):
            if c.kind == "probability":
                return i
        return None


def _coerce(value, column: Column):
    kind = column.kind
    if kind == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaMismatch(f"column {column.name}: expected int, got {value!r}")
        return value
    if kind in ("real", "probability"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaMismatch(f"column {column.name}: expected number, got {value!r}")
        value = float(value)
        if kind == "probability" and not 0.0 <= value <= 1.0:
            raise ConstraintViolation(
                f"column {column.name}: probability {value} outside [0, 1]"
            )
        return value
    if isinstance(value, str):
        return value
    raise SchemaMismatch(f"column {column.name}: expected str, got {value!r}")


class ProbRelation:
    """Named bag-relation with an optional block-level probability key.

    Mutations are serialized by an internal lock; the constraint check
    and the insert form one atomic critical section. Readers may share
    the relation freely -- rows() hands out a copy.
    """

    def __init__(self, name: str, schema: Schema, prob_key: Sequence[str] | None = None):
        self.name = name
        self.schema = schema
        self.prob_key = tuple(prob_key) if prob_key else None
        if self.prob_key:
            if schema.probability_index is None:
                raise SchemaMismatch(f"{name}: prob_key set but no probability column")
            self._key_idx = tuple(schema.index_of(c) for c in self.prob_key)
        else:
            self._key_idx = ()
        self._prob_idx = schema.probability_index
        self._rows: list[tuple] = []
        self._key_mass: dict[tuple, float] = {}
        self._lock = threading.Lock()
        self.version = 0

    def __len__(self) -> int:
        return len(self._rows)

    def rows(self) -> list[tuple]:
        with self._lock:
            return list(self._rows)

    def _validate_row(self, row: Sequence) -> tuple:
        if len(row) != len(self.schema.columns):
            raise SchemaMismatch(
                f"{self.name}: row arity {len(row)} != schema arity "
                f"{len(self.schema.columns)}"
            )
        return tuple(_coerce(v, c) for v, c in zip(row, self.schema.columns))

    def insert_rows(self, rows: Iterable[Sequence]) -> None:
        """Insert a batch atomically; on any violation nothing is inserted."""
        batch = [self._validate_row(r) for r in rows]
        with self._lock:
            if self.prob_key:
                added: dict[tuple, float] = {}
                for row in batch:
                    key = tuple(row[i] for i in self._key_idx)
                    added[key] = added.get(key, 0.0) + row[self._prob_idx]
                offending = []
                for key, extra in added.items():
                    mass = self._key_mass.get(key, 0.0) + extra
                    if mass > 1.0 + MASS_EPS:
                        offending.append((key, mass))
                if offending:
                    raise ConstraintViolation(
                        f"{self.name}: probability mass exceeds 1 for "
                        f"{len(offending)} key group(s), first "
                        f"{offending[0][0]} at {offending[0][1]:.6f}",
                        offending,
                    )
                for key, extra in added.items():
                    self._key_mass[key] = self._key_mass.get(key, 0.0) + extra
            self._rows.extend(batch)
            self.version += 1

    def open_world_mass(self, key: Sequence) -> float:
        """1 minus the asserted mass of a key group; 1 for absent keys."""
        if not self.prob_key:
            raise SchemaMismatch(f"{self.name}: no prob_key defined")
        mass = self._key_mass.get(tuple(key), 0.0)
        return max(0.0, 1.0 - mass)

    def copy_as(self, name: str) -> "ProbRelation":
        out = ProbRelation(name, self.schema, self.prob_key)
        with self._lock:
            out._rows = list(self._rows)
            out._key_mass = dict(self._key_mass)
        return out


def bag_equal(a: ProbRelation, b: ProbRelation) -> bool:
    return a.schema == b.schema and Counter(a.rows()) == Counter(b.rows())


def relation_from_rows(
    name: str,
    schema: Schema,
    rows: Iterable[Sequence],
    prob_key: Sequence[str] | None = None,
) -> ProbRelation:
    rel = ProbRelation(name, schema, prob_key)
    rel.insert_rows(rows)
    return rel


# ---------------------------------------------------------------------------
# Snapshot persistence

def _format_cell(value, column: Column) -> str:
    if column.kind == "integer":
        return str(value)
    if column.kind in ("real", "probability"):
        return f"{value:.17g}"
    return value


def _parse_cell(text: str, column: Column):
    if column.kind == "integer":
        try:
            return int(text)
        except ValueError:
            raise SchemaMismatch(f"column {column.name}: bad integer {text!r}") from None
    if column.kind in ("real", "probability"):
        try:
            return float(text)
        except ValueError:
            raise SchemaMismatch(f"column {column.name}: bad number {text!r}") from None
    return text


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.json")


def save_snapshot(rel: ProbRelation, path: str | Path) -> None:
    """Write the relation as CSV plus a JSON metadata sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(rel.schema.names)
        for row in rel.rows():
            writer.writerow(
                [_format_cell(v, c) for v, c in zip(row, rel.schema.columns)]
            )
    meta = {
        "name": rel.name,
        "schema": [[c.name, c.kind] for c in rel.schema.columns],
        "prob_key": list(rel.prob_key) if rel.prob_key else None,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_snapshot(path: str | Path) -> ProbRelation:
    """Load a snapshot; constraints are revalidated so tampered files fail."""
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    schema = Schema.of(*[(n, k) for n, k in meta["schema"]])
    rel = ProbRelation(meta["name"], schema, meta["prob_key"])
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != schema.names:
            raise SchemaMismatch(f"{path}: header {header} != schema {schema.names}")
        rows = [
            tuple(_parse_cell(cell, col) for cell, col in zip(row, schema.columns))
            for row in reader
        ]
    rel.insert_rows(rows)
    return rel


# ---------------------------------------------------------------------------
# Views

@dataclass
class ViewDef:
    """A named pure transform over input relations (base or view)."""

    name: str
    inputs: tuple[str, ...]
    transform: Callable[..., ProbRelation]


@dataclass
class _ViewState:
    definition: ViewDef
    cache: ProbRelation | None = None
    cache_stamp: tuple | None = None
    materialized: ProbRelation | None = None
    keep_materialized: bool = False


class RelStore:
    """Holds base relations and the view graph over them."""

    def __init__(self):
        self._relations: dict[str, ProbRelation] = {}
        self._views: dict[str, _ViewState] = {}
        self._lock = threading.Lock()

    # -- base relations -----------------------------------------------------

    def create(
        self, name: str, schema: Schema, prob_key: Sequence[str] | None = None
    ) -> ProbRelation:
        with self._lock:
            if name in self._relations or name in self._views:
                raise SchemaMismatch(f"name {name!r} already in use")
            rel = ProbRelation(name, schema, prob_key)
            self._relations[name] = rel
            return rel

    def add(self, rel: ProbRelation) -> ProbRelation:
        with self._lock:
            if rel.name in self._relations or rel.name in self._views:
                raise SchemaMismatch(f"name {rel.name!r} already in use")
            self._relations[rel.name] = rel
            return rel

    def relation(self, name: str) -> ProbRelation:
        try:
            return self._relations[name]
        except KeyError:
            raise UnknownRelation(name) from None

    def has(self, name: str) -> bool:
        return name in self._relations or name in self._views

    def names(self) -> list[str]:
        return sorted(self._relations) + sorted(self._views)

    # -- views ----------------------------------------------------------------

    def register_view(self, view: ViewDef) -> None:
        with self._lock:
            if view.name in self._relations or view.name in self._views:
                raise SchemaMismatch(f"name {view.name!r} already in use")
            for inp in view.inputs:
                if inp not in self._relations and inp not in self._views:
                    raise UnknownRelation(inp)
            if self._would_cycle(view):
                raise CycleDetected(f"view {view.name} closes a dependency cycle")
            self._views[view.name] = _ViewState(view)

    def _would_cycle(self, view: ViewDef) -> bool:
        # A cycle through the new view requires reaching view.name from
        # one of its inputs; inputs must already exist, so only a
        # same-named input could close a cycle at registration time.
        seen = set()
        stack = list(view.inputs)
        while stack:
            cur = stack.pop()
            if cur == view.name:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            if cur in self._views:
                stack.extend(self._views[cur].definition.inputs)
        return False

    def _base_stamp(self, name: str, acc: dict[str, int]) -> None:
        if name in self._relations:
            acc[name] = self._relations[name].version
            return
        for inp in self._views[name].definition.inputs:
            self._base_stamp(inp, acc)

    def evaluate(self, name: str) -> ProbRelation:
        """Evaluate a view (or return a base relation by name).

        Materialized views serve their stored copy until invalidated.
        Unmaterialized views recompute only when a transitive base
        input has changed since the cached evaluation.
        """
        if name in self._relations:
            return self._relations[name]
        if name not in self._views:
            raise UnknownView(name)
        state = self._views[name]
        with self._lock:
            if state.materialized is not None:
                return state.materialized
            stamp_acc: dict[str, int] = {}
            self._base_stamp(name, stamp_acc)
            stamp = tuple(sorted(stamp_acc.items()))
            if state.cache is not None and state.cache_stamp == stamp:
                return state.cache
        inputs = [self.evaluate(inp) for inp in state.definition.inputs]
        result = state.definition.transform(*inputs)
        with self._lock:
            state.cache = result
            state.cache_stamp = stamp
            if state.keep_materialized:
                state.materialized = result
        return result

    def materialize(self, name: str) -> ProbRelation:
        """Store the view's result; evaluations read it until invalidated."""
        if name not in self._views:
            raise UnknownView(name)
        state = self._views[name]
        with self._lock:
            state.materialized = None
            state.keep_materialized = True
            state.cache = None
            state.cache_stamp = None
        result = self.evaluate(name)
        return result

    def invalidate(self, name: str) -> None:
        """Drop a view's stored copy; the next evaluation recomputes it."""
        if name not in self._views:
            raise UnknownView(name)
        state = self._views[name]
        with self._lock:
            state.materialized = None
            state.cache = None
            state.cache_stamp = None
