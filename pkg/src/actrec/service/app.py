"""HTTP service backing the axiom editor and run automation.

State lives in a workspace directory prepared by the CLI pipeline:
axiom edits are validated and persisted atomically under a version
token (stale tokens get 409), and POST /runs re-scores the workspace
with the current tables on a single background worker so runs never
block axiom reads.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import axioms as ax
from ..codes import ACTIVITIES, ACTIVITY_NAMES, Activity, PropertyKind
from ..errors import ConstraintViolation
from ..pipeline import PipelineConfig, Workspace, run_inference_chain
from ..scenario import OBJECT_NAMES
from .schemas import (
    ActivitiesResponse,
    ActivityInfo,
    AxiomRowModel,
    AxiomTableModel,
    AxiomTablePut,
    ObjectInfo,
    ObjectsResponse,
    RunCreated,
    RunStatus,
)


class ServiceState:
    """Axiom tables with version tokens, plus the run registry."""

    def __init__(self, workspace: str | Path, config: PipelineConfig | None = None):
        self.workspace = Workspace(workspace)
        self.config = config or PipelineConfig()
        self._lock = threading.Lock()
        self._tables: dict[PropertyKind, ax.AxiomTable] = {}
        self._versions: dict[PropertyKind, int] = {}
        for prop in PropertyKind:
            try:
                self._tables[prop] = self.workspace.load_axioms(prop)
            except FileNotFoundError:
                self._tables[prop] = ax.AxiomTable(prop, {}, 0)
            self._versions[prop] = 1
        self._runs: dict[str, dict] = {}
        self._executor = ThreadPoolExecutor(max_workers=1)

    def table(self, prop: PropertyKind) -> tuple[ax.AxiomTable, int]:
        with self._lock:
            return self._tables[prop], self._versions[prop]

    def replace_table(
        self, prop: PropertyKind, table: ax.AxiomTable, expected_version: int
    ) -> int:
        with self._lock:
            if expected_version != self._versions[prop]:
                raise StaleVersion(self._versions[prop])
            self._tables[prop] = table
            self._versions[prop] += 1
            self.workspace.save_axioms(table)
            return self._versions[prop]

    def submit_run(self) -> str:
        with self._lock:
            lap = self._tables[PropertyKind.LAP]
            bho = self._tables[PropertyKind.BHO]
        run_id = f"run-{len(self._runs) + 1:04d}"
        entry = {"status": "pending", "record": None, "error": None}
        with self._lock:
            self._runs[run_id] = entry

        def work():
            entry["status"] = "running"
            try:
                record = run_inference_chain(
                    self.config, self.workspace.root, lap, bho
                )
                entry["record"] = record
                entry["status"] = "done"
            except Exception as exc:  # surfaced via GET /runs/{id}
                entry["error"] = str(exc)
                entry["status"] = "failed"

        self._executor.submit(work)
        return run_id

    def run_status(self, run_id: str) -> dict:
        with self._lock:
            if run_id not in self._runs:
                raise KeyError(run_id)
            return self._runs[run_id]


class StaleVersion(Exception):
    def __init__(self, current: int):
        super().__init__(f"version token mismatch; current version is {current}")
        self.current = current


def _table_to_model(
    prop: PropertyKind, table: ax.AxiomTable, version: int
) -> AxiomTableModel:
    doc = ax.table_to_dict(table)
    return AxiomTableModel(
        property=doc["property"],
        training_size=doc["training_size"],
        rows=[AxiomRowModel(**row) for row in doc["rows"]],
        version=version,
    )


def _model_to_table(body: AxiomTablePut) -> ax.AxiomTable:
    prop = PropertyKind(body.property)
    rows = {}
    offending = []
    for row in body.rows:
        probs = {int(a): getattr(row, f"p{int(a)}") for a in ACTIVITIES}
        mass = sum(probs.values())
        if mass > 1.0 + 1e-9:
            offending.append((row.code, mass))
            continue
        rows[row.code] = ax.AxiomRow(row.code, probs, row.provenance)
    if offending:
        raise ConstraintViolation(
            f"{len(offending)} row(s) exceed unit activity mass", offending
        )
    return ax.AxiomTable(prop, rows, body.training_size)


def create_app(
    workspace: str | Path, config: PipelineConfig | None = None
) -> FastAPI:
    state = ServiceState(workspace, config)
    app = FastAPI(title="actrec", version="0.1.0")
    app.state.service = state

    def _prop(name: str) -> PropertyKind:
        try:
            return PropertyKind(name.upper())
        except ValueError:
            raise HTTPException(404, f"unknown property {name!r}") from None

    @app.get("/axioms/{prop}", response_model=AxiomTableModel)
    def get_axioms(prop: str):
        kind = _prop(prop)
        table, version = state.table(kind)
        return _table_to_model(kind, table, version)

    @app.put("/axioms/{prop}", response_model=AxiomTableModel)
    def put_axioms(prop: str, body: AxiomTablePut):
        kind = _prop(prop)
        if body.property != kind.value:
            raise HTTPException(400, "property in body does not match path")
        try:
            table = _model_to_table(body)
            new_version = state.replace_table(kind, table, body.version)
        except ConstraintViolation as exc:
            raise HTTPException(
                400,
                {
                    "message": str(exc),
                    "violations": [[code, mass] for code, mass in exc.violations],
                },
            ) from None
        except StaleVersion as exc:
            raise HTTPException(409, str(exc)) from None
        stored, version = state.table(kind)
        return _table_to_model(kind, stored, version)

    @app.get("/meta/activities", response_model=ActivitiesResponse)
    def meta_activities():
        codes = [Activity.NULL, *ACTIVITIES]
        return ActivitiesResponse(
            activities=[
                ActivityInfo(code=int(a), name=ACTIVITY_NAMES[a]) for a in codes
            ]
        )

    @app.get("/meta/objects", response_model=ObjectsResponse)
    def meta_objects():
        return ObjectsResponse(
            objects=[
                ObjectInfo(id=i, name=OBJECT_NAMES[i]) for i in sorted(OBJECT_NAMES)
            ]
        )

    @app.post("/runs", response_model=RunCreated, status_code=202)
    def post_run():
        if not state.workspace.has("smoothed"):
            raise HTTPException(
                400, "workspace has no smoothed candidates; run the pipeline first"
            )
        run_id = state.submit_run()
        return RunCreated(run_id=run_id, status="pending")

    @app.get("/runs/{run_id}", response_model=RunStatus)
    def get_run(run_id: str):
        try:
            entry = state.run_status(run_id)
        except KeyError:
            raise HTTPException(404, f"unknown run {run_id!r}") from None
        record = entry["record"]
        return RunStatus(
            run_id=run_id,
            status=entry["status"],
            report=record.report if record else None,
            timings={
                name: {"seconds": t.seconds, "data_seconds": t.data_seconds}
                for name, t in record.timings.items()
            }
            if record
            else None,
            data_seconds=record.data_seconds if record else None,
            ratio=record.ratio if record else None,
            error=entry["error"],
        )

    return app
