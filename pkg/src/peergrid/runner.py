"""End-to-end orchestration: load -> attack -> assemble -> solve -> settle.

This is the single entry point the CLI and the HTTP service share, so both
front ends produce identical payloads for identical scenarios.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from .assembly import AssembledProblem, assemble, extract_dlmp
from .attacks import apply_attacks
from .powerflow import GridOptions
from .scenario import PreparedScenario, ScenarioSpec, load_scenario, prepare
from .settlement import DeltaReport, SettlementReport, compare, compute_settlement
from .solver import Solution, solve


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-9
    shedding: bool = True
    diag_loss: bool = False
    dump_problem: bool = False
    solver: str = "CLARABEL"
    seed: int | None = None

    def grid_options(self) -> GridOptions:
        return GridOptions(shedding=self.shedding, diag_loss=self.diag_loss)


@dataclass
class RunResult:
    prepared: PreparedScenario
    assembled: AssembledProblem
    solution: Solution
    settlement: SettlementReport | None
    wall_time_s: float
    problem_dump: str | None = None

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def exit_code(self) -> int:
        return {"optimal": 0, "infeasible": 2}.get(self.solution.status, 3)


def run_prepared(prepared: PreparedScenario, config: RunConfig = RunConfig()) -> RunResult:
    t0 = time.perf_counter()
    assembled = assemble(prepared, config.grid_options())
    solution = solve(assembled.problem, tol=config.tol, solver=config.solver)

    if solution.status == "infeasible" and not config.shedding:
        solution.infeasibility_hint.extend(
            f"shedding disabled at node {n}"
            for n in sorted(prepared.loads_reported)
            if prepared.loads_reported[n].p.any()
        )

    advisories = list(assembled.market.advisories)
    if assembled.grid.flagged_islands:
        isl = assembled.grid.flagged_islands
        stranded = sorted(
            a.id
            for a in prepared.agents.prosumers + prepared.agents.consumers
            if a.node in isl
        )
        note = f"islanded nodes {list(isl)}"
        if stranded:
            note += f"; stranded agents {stranded} served locally or shed"
        advisories.append(note)

    settlement = None
    if solution.status == "optimal":
        dlmp = extract_dlmp(solution, prepared)
        settlement = compute_settlement(
            solution, dlmp, prepared, advisories=tuple(advisories)
        )
    dump = assembled.problem.dump() if config.dump_problem else None
    return RunResult(
        prepared=prepared,
        assembled=assembled,
        solution=solution,
        settlement=settlement,
        wall_time_s=time.perf_counter() - t0,
        problem_dump=dump,
    )


def run_spec(spec: ScenarioSpec, config: RunConfig = RunConfig()) -> RunResult:
    prepared = apply_attacks(prepare(spec), spec.attacks)
    return run_prepared(prepared, config)


def run_file(path: str | Path, config: RunConfig = RunConfig()) -> RunResult:
    return run_spec(load_scenario(path), config)


@dataclass
class CompareResult:
    pre: RunResult
    post: RunResult
    delta: DeltaReport | None

    @property
    def exit_code(self) -> int:
        return max(self.pre.exit_code, self.post.exit_code)


def run_compare(
    pre_spec: ScenarioSpec, post_spec: ScenarioSpec, config: RunConfig = RunConfig()
) -> CompareResult:
    """Solve two scenarios and diff the settlements.

    Scenarios are solved from independent prepared inputs; solves are kept
    sequential for reproducible output ordering.
    """
    pre = run_spec(pre_spec, config)
    post = run_spec(post_spec, config)
    delta = None
    if pre.settlement is not None and post.settlement is not None:
        delta = compare(pre.settlement, post.settlement)
    return CompareResult(pre=pre, post=post, delta=delta)
