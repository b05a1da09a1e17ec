"""Pydantic request/response models for the HTTP API.

The axiom wire format mirrors the on-disk JSON exactly
({property, training_size, rows:[{code, p101..p105, provenance}]})
plus a version token for optimistic concurrency.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class AxiomRowModel(BaseModel):
    code: str
    p101: float = Field(ge=0.0, le=1.0)
    p102: float = Field(ge=0.0, le=1.0)
    p103: float = Field(ge=0.0, le=1.0)
    p104: float = Field(ge=0.0, le=1.0)
    p105: float = Field(ge=0.0, le=1.0)
    provenance: Literal["learned", "manual"] = "learned"


class AxiomTableModel(BaseModel):
    property: Literal["LAP", "BHO"]
    training_size: int = 0
    rows: list[AxiomRowModel]
    version: int


class AxiomTablePut(BaseModel):
    property: Literal["LAP", "BHO"]
    training_size: int = 0
    rows: list[AxiomRowModel]
    version: int


class ActivityInfo(BaseModel):
    code: int
    name: str


class ObjectInfo(BaseModel):
    id: int
    name: str


class ActivitiesResponse(BaseModel):
    activities: list[ActivityInfo]


class ObjectsResponse(BaseModel):
    objects: list[ObjectInfo]


class RunCreated(BaseModel):
    run_id: str
    status: str


class RunStatus(BaseModel):
    run_id: str
    status: Literal["pending", "running", "done", "failed"]
    report: dict | None = None
    timings: dict | None = None
    data_seconds: float | None = None
    ratio: float | None = None
    error: str | None = None


class ErrorDetail(BaseModel):
    message: str
    violations: list = []
