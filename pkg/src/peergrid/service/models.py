"""Pydantic request/response models for the HTTP service.

Requests either name a bundled scenario or carry the scenario inline
(feeder and agents embedded as JSON objects, matching the file schemas).
Responses mirror the report payload written by the CLI.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field, model_validator


class AttackIn(BaseModel):
    kind: Literal["price_tamper", "demand_inflation", "line_outage"]
    target: str
    param: float | None = None


class SolveOptions(BaseModel):
    tol: float = Field(default=1e-9, gt=0)
    shedding: bool = True
    diag_loss: bool = False
    dump_problem: bool = False


class ScenarioIn(BaseModel):
    """One scenario: either `scenario` (bundled name) or inline parts."""

    scenario: str | None = None
    feeder: dict[str, Any] | None = None
    agents: dict[str, Any] | None = None
    horizon: int = Field(default=1, ge=1)
    voll_usd_per_mwh: float = 2000.0
    substation_usd_per_mwh: float = 50.0
    attacks: list[AttackIn] = Field(default_factory=list)
    name: str | None = None

    @model_validator(mode="after")
    def _bundled_or_inline(self):
        if self.scenario is None and (self.feeder is None or self.agents is None):
            raise ValueError("provide `scenario` (bundled name) or inline `feeder` + `agents`")
        return self


class SolveRequest(BaseModel):
    scenario: ScenarioIn
    options: SolveOptions = Field(default_factory=SolveOptions)


class CompareRequest(BaseModel):
    pre: ScenarioIn
    post: ScenarioIn
    options: SolveOptions = Field(default_factory=SolveOptions)


class AgentMoneyRow(BaseModel):
    agent: str
    node: int
    energy_mwh: float
    amount_usd: float


class DlmpRow(BaseModel):
    node: int
    phase: str
    t: int
    usd_per_mwh: float


class VoltageRow(BaseModel):
    node: int
    phase: str
    t: int
    vm_pu: float


class CurtailmentRow(BaseModel):
    node: int
    phase: str
    t: int
    mw: float


class TradeRow(BaseModel):
    seller: str
    buyer: str
    phase: str
    t: int
    kw: float


class SolveResponse(BaseModel):
    """Mirror of the report payload (extra keys from the payload pass through)."""

    model_config = {"extra": "allow"}

    schema_: str = Field(alias="schema")
    scenario: str
    status: str
    exit_code: int
    objective_usd: float | None = None
    totals: dict[str, float] | None = None
    dlmp_range_usd_per_mwh: list[float] | None = None
    bills: list[AgentMoneyRow] | None = None
    revenues: list[AgentMoneyRow] | None = None
    dlmp: list[DlmpRow] | None = None
    voltage: list[VoltageRow] | None = None
    curtailment: list[CurtailmentRow] | None = None
    trades: list[TradeRow] | None = None


class CompareResponse(BaseModel):
    model_config = {"extra": "allow"}

    schema_: str = Field(alias="schema")
    pre: SolveResponse
    post: SolveResponse
    exit_code: int
    delta: dict[str, Any] | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
    solver: str


class ScenarioListResponse(BaseModel):
    scenarios: list[str]
