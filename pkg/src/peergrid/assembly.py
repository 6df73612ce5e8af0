"""Joint problem assembly and price extraction.

Stitches the market and grid blocks into one conic program, adds the two
coupling families the blocks cannot emit alone, and recovers nodal prices
from the duals of the labeled active-balance rows:

* demand coupling — at every node/phase carrying feeder-bound consumers,
  cleared purchases plus curtailment equal the reported load;
* upstream capacity — per phase, what the upstream counterparty sells to
  consumers cannot exceed the substation import.
"""

from __future__ import annotations

from dataclasses import dataclass

from .conic import ConicProblem, ProblemBuilder
from .market import UPSTREAM, MarketBlock, add_market_block
from .powerflow import GridBlock, GridOptions, add_grid_block
from .scenario import PreparedScenario


@dataclass(frozen=True)
class AssembledProblem:
    problem: ConicProblem
    market: MarketBlock
    grid: GridBlock


def assemble(prepared: PreparedScenario, options: GridOptions = GridOptions()) -> AssembledProblem:
    b = ProblemBuilder()
    scale = prepared.money_scale

    market = add_market_block(b, prepared.agents, prepared.horizon, scale)
    grid = add_grid_block(
        b,
        prepared.feeder,
        prepared.agents,
        prepared.loads_reported,
        prepared.horizon,
        prepared.voll,
        prepared.substation_price,
        scale,
        options,
    )

    feeder_cons: dict[tuple[int, int], list] = {}
    for c in prepared.agents.consumers:
        if c.demand_source == "feeder":
            for ph in c.phases:
                feeder_cons.setdefault((c.node, ph), []).append(c)

    for t in range(prepared.horizon):
        for (node, ph), cons in sorted(feeder_cons.items()):
            load = prepared.loads_reported.get(node)
            rhs = float(load.p[ph]) if load is not None else 0.0
            terms = {("dem", c.id, ph, t): 1.0 for c in cons}
            if rhs > 0.0:
                terms[("pshd", node, ph, t)] = 1.0
            b.add_eq(terms, rhs, label=("dem_couple", t, node, ph))

        for ph in range(3):
            terms = {}
            for c in prepared.agents.consumers:
                if ph in c.phases:
                    terms[("trade", UPSTREAM, c.id, ph, t)] = 1.0
            if not terms:
                continue
            terms[("pug", ph, t)] = -1.0
            b.add_ineq(terms, 0.0, label=("upstream_cap", t, ph))

    return AssembledProblem(problem=b.build(), market=market, grid=grid)


@dataclass(frozen=True)
class DLMPSurface:
    """Nodal marginal prices in $/MWh keyed by (node, phase, t)."""

    prices: dict[tuple[int, int, int], float]

    def at(self, node: int, phase: int, t: int = 0) -> float:
        return self.prices[(node, phase, t)]

    def range(self) -> tuple[float, float]:
        vals = list(self.prices.values())
        return (min(vals), max(vals)) if vals else (float("nan"), float("nan"))

    def rows(self):
        for (node, phase, t), price in sorted(self.prices.items()):
            yield node, phase, t, price


def extract_dlmp(solution, prepared: PreparedScenario) -> DLMPSurface:
    """Marginal cost of nodal load, converted to $/MWh.

    The nodal load parameter appears on the right-hand side of the active
    balance row and, where feeder-bound consumers sit, of the demand
    coupling row; the price is the sum of both duals (the coupling dual is
    zero whenever the loss-procurement channel is interior). The surface
    covers every energized node/phase on the static topology, so islanded
    nodes keep their prices — curtailment pushes them to VOLL.
    """
    from .feeder import energized_phases

    scale = prepared.money_scale
    phases = energized_phases(prepared.feeder)
    prices = {}
    for t in range(prepared.horizon):
        for node in prepared.feeder.network.nodes:
            for ph in phases[node]:
                dual = solution.eq_dual(("p_balance", t, node, ph))
                dual += solution.eq_duals.get(("dem_couple", t, node, ph), 0.0)
                prices[(node, ph, t)] = dual / scale
    return DLMPSurface(prices=prices)
