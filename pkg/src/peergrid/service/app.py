"""FastAPI service wrapping the core package.

Endpoints:

* ``GET  /health``      — liveness plus solver name.
* ``GET  /scenarios``   — names of bundled scenarios.
* ``POST /solve``       — solve one scenario, return the report payload.
* ``POST /compare``     — solve two scenarios and include the delta block.

Infeasible or numerically failed solves are still HTTP 200: they are valid
simulation outcomes, reported through ``status`` / ``exit_code``. Malformed
inputs (bad feeder, unknown agents, broken attack lists) map to 400.
"""

from __future__ import annotations

import importlib.resources

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..agents import AgentError
from ..feeder import FeederError
from ..reports import payload_from_compare, payload_from_result
from ..runner import RunConfig, run_compare, run_spec
from ..scenario import ScenarioError, ScenarioSpec, load_scenario
from .models import (
    CompareRequest,
    CompareResponse,
    HealthResponse,
    ScenarioIn,
    ScenarioListResponse,
    SolveOptions,
    SolveRequest,
    SolveResponse,
)

_INPUT_ERRORS = (FeederError, AgentError, ScenarioError, KeyError, ValueError)


def bundled_scenario_dir():
    return importlib.resources.files("peergrid") / "data" / "scenarios"


def bundled_scenario_names() -> list[str]:
    return sorted(p.name[: -len(".json")] for p in bundled_scenario_dir().iterdir()
                  if p.name.endswith(".json"))


def _to_spec(incoming: ScenarioIn) -> ScenarioSpec:
    if incoming.scenario is not None:
        path = bundled_scenario_dir() / f"{incoming.scenario}.json"
        if not path.is_file():
            raise ScenarioError(
                f"unknown bundled scenario {incoming.scenario!r}; "
                f"available: {bundled_scenario_names()}"
            )
        spec = load_scenario(path)
        if incoming.attacks:
            from ..scenario import AttackSpec

            extra = tuple(
                AttackSpec(kind=a.kind, target=a.target, param=a.param)
                for a in incoming.attacks
            )
            spec = ScenarioSpec(
                feeder=spec.feeder,
                agents=spec.agents,
                horizon=spec.horizon,
                voll=spec.voll,
                substation_price=spec.substation_price,
                attacks=spec.attacks + extra,
                name=spec.name,
                base_dir=spec.base_dir,
            )
        return spec
    data = {
        "name": incoming.name or "inline",
        "feeder": incoming.feeder,
        "agents": incoming.agents,
        "horizon": incoming.horizon,
        "voll_usd_per_mwh": incoming.voll_usd_per_mwh,
        "substation_usd_per_mwh": incoming.substation_usd_per_mwh,
        "attacks": [a.model_dump() for a in incoming.attacks],
    }
    from ..scenario import parse_scenario

    return parse_scenario(data)


def _config(options: SolveOptions) -> RunConfig:
    return RunConfig(
        tol=options.tol,
        shedding=options.shedding,
        diag_loss=options.diag_loss,
        dump_problem=options.dump_problem,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="peergrid",
        version=__version__,
        description=(
            "P2P energy trading co-optimized with three-phase unbalanced "
            "network flow; adversarial-agent scenario analysis."
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__, solver="CLARABEL")

    @app.get("/scenarios", response_model=ScenarioListResponse)
    def scenarios():
        return ScenarioListResponse(scenarios=bundled_scenario_names())

    @app.post("/solve", response_model=SolveResponse)
    def solve_endpoint(req: SolveRequest):
        try:
            spec = _to_spec(req.scenario)
            result = run_spec(spec, _config(req.options))
        except _INPUT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return payload_from_result(result)

    @app.post("/compare", response_model=CompareResponse)
    def compare_endpoint(req: CompareRequest):
        try:
            pre = _to_spec(req.pre)
            post = _to_spec(req.post)
            result = run_compare(pre, post, _config(req.options))
        except _INPUT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return payload_from_compare(result)

    return app


app = create_app()
