"""Bills, revenues, totals and pre/post scenario deltas.

Settlement is DLMP-based: every consumer pays its nodal per-phase price for
the demand it cleared, every prosumer earns its nodal price for the power it
dispatched, and the substation is paid its nodal price for imports. The
merchandising surplus (congestion plus loss rent) is whatever the books
leave over; the accounting identity

    sum(bills) = sum(revenues) + substation payment + surplus

holds by construction and is reported, not asserted as a sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import DLMPSurface
from .powerflow import TightnessReport, check_soc_tightness
from .scenario import PreparedScenario
from .solver import Solution


@dataclass(frozen=True)
class AgentSettlement:
    agent_id: str
    kind: str                    # "prosumer" | "consumer"
    node: int
    energy_mwh: float            # cleared energy over the horizon
    amount_usd: float            # bill (consumer) or revenue (prosumer)


@dataclass(frozen=True)
class SettlementReport:
    scenario: str
    status: str
    objective_usd: float
    market_cost_usd: float       # prosumer offers minus consumer utility
    grid_cost_usd: float         # substation energy plus curtailment penalty
    total_cost_usd: float
    bills: tuple[AgentSettlement, ...]
    revenues: tuple[AgentSettlement, ...]
    substation_payment_usd: float
    surplus_usd: float
    dlmp: DLMPSurface
    curtailment_mw: dict         # (node, phase, t) -> MW shed
    total_curtailment_mw: float
    voltage_pu: dict             # (node, phase, t) -> |V| pu
    substation_import_mw: dict   # (phase, t) -> MW
    trades_kw: dict              # (seller, buyer, phase, t) -> kW
    losses_mw: float
    soc_gap: TightnessReport
    reported_vs_true_mw: dict    # node -> (reported MW, true MW) where they differ
    attacks_applied: tuple[str, ...] = ()
    advisories: tuple[str, ...] = ()

    def bill_of(self, agent_id: str) -> float:
        for entry in self.bills:
            if entry.agent_id == agent_id:
                return entry.amount_usd
        raise KeyError(f"no bill for {agent_id!r}")

    def revenue_of(self, agent_id: str) -> float:
        for entry in self.revenues:
            if entry.agent_id == agent_id:
                return entry.amount_usd
        raise KeyError(f"no revenue for {agent_id!r}")


def compute_settlement(
    solution: Solution,
    dlmp: DLMPSurface,
    prepared: PreparedScenario,
    advisories: tuple[str, ...] = (),
) -> SettlementReport:
    """Price the solved dispatch. Requires an optimal solution."""
    if solution.status != "optimal":
        raise ValueError(f"cannot settle a non-optimal solution ({solution.status})")

    base_mw = prepared.feeder.network.base.mw
    scale = prepared.money_scale      # MWh per pu-step
    horizon = prepared.horizon
    agents = prepared.agents

    bills = []
    for c in agents.consumers:
        energy = 0.0
        amount = 0.0
        for t in range(horizon):
            for ph in c.phases:
                dem = solution.value(("dem", c.id, ph, t))
                energy += dem * scale
                amount += dlmp.at(c.node, ph, t) * dem * scale
        bills.append(AgentSettlement(c.id, "consumer", c.node, energy, amount))

    revenues = []
    for p in agents.prosumers:
        energy = 0.0
        amount = 0.0
        for t in range(horizon):
            for ph in p.phases:
                out = solution.value(("pp", p.id, ph, t))
                energy += out * scale
                amount += dlmp.at(p.node, ph, t) * out * scale
        revenues.append(AgentSettlement(p.id, "prosumer", p.node, energy, amount))

    # imports are paid at the contracted substation price; whenever the
    # import is strictly positive the nodal dual equals it anyway
    sub_payment = 0.0
    sub_import = {}
    from .feeder import energized_phases

    phases = energized_phases(prepared.feeder)
    for t in range(horizon):
        for ph in range(3):
            pug = solution.values.get(("pug", ph, t), 0.0)
            sub_import[(ph, t)] = pug * base_mw
            sub_payment += prepared.substation_price * pug * scale

    # objective split: market side (offers minus utility) vs grid side
    market_cost = 0.0
    for p in agents.prosumers:
        for t in range(horizon):
            for ph in p.phases:
                market_cost += p.offer_price * solution.value(("pp", p.id, ph, t)) * scale
    for c in agents.consumers:
        for t in range(horizon):
            for ph in c.phases:
                market_cost -= c.utility_price * solution.value(("dem", c.id, ph, t)) * scale

    curtail = {}
    total_shed_pu = 0.0
    grid_cost = 0.0
    for t in range(horizon):
        for ph in range(3):
            grid_cost += prepared.substation_price * solution.values.get(("pug", ph, t), 0.0) * scale
        for n in prepared.feeder.network.nodes:
            for ph in range(3):
                shd = solution.values.get(("pshd", n, ph, t))
                if shd is None:
                    continue
                grid_cost += prepared.voll * shd * scale
                total_shed_pu += shd
                if shd * base_mw > 1e-9:
                    curtail[(n, ph, t)] = shd * base_mw

    voltage = {}
    for t in range(horizon):
        for n in prepared.feeder.network.nodes:
            for ph in phases[n]:
                voltage[(n, ph, t)] = float(np.sqrt(max(solution.value(("v", n, ph, t)), 0.0)))

    trades = {}
    for key, val in solution.values.items():
        if key[0] == "trade" and val * base_mw * 1e3 > 1e-6:
            _, seller, buyer, ph, t = key
            trades[(seller, buyer, ph, t)] = val * base_mw * 1e3

    losses = 0.0
    for t in range(horizon):
        for ln in prepared.feeder.network.lines:
            if not ln.in_service:
                continue
            for ph in range(3):
                for c in ln.phases:
                    coeff = ln.r[ph, c]
                    if coeff:
                        losses += coeff * solution.value(("a", ln.id, c, t))
    losses_mw = losses * base_mw / horizon if horizon else 0.0

    reported_vs_true = {}
    for n in sorted(prepared.loads_reported):
        rep = prepared.loads_reported[n]
        true = prepared.loads_true[n]
        if not np.allclose(rep.p, true.p) or not np.allclose(rep.q, true.q):
            reported_vs_true[n] = (
                float(rep.p.sum() * base_mw),
                float(true.p.sum() * base_mw),
            )

    total_bills = sum(x.amount_usd for x in bills)
    total_rev = sum(x.amount_usd for x in revenues)
    surplus = total_bills - total_rev - sub_payment

    soc = check_soc_tightness(solution, prepared.feeder, horizon)

    return SettlementReport(
        scenario=prepared.name,
        status=solution.status,
        objective_usd=float(solution.objective_value),
        market_cost_usd=market_cost,
        grid_cost_usd=grid_cost,
        total_cost_usd=market_cost + grid_cost,
        bills=tuple(bills),
        revenues=tuple(revenues),
        substation_payment_usd=sub_payment,
        surplus_usd=surplus,
        dlmp=dlmp,
        curtailment_mw=curtail,
        total_curtailment_mw=float(sum(curtail.values())),
        voltage_pu=voltage,
        substation_import_mw=sub_import,
        trades_kw=trades,
        losses_mw=losses_mw,
        soc_gap=soc,
        reported_vs_true_mw=reported_vs_true,
        attacks_applied=prepared.attacks_applied,
        advisories=advisories,
    )


@dataclass(frozen=True)
class DeltaReport:
    """Per-agent and per-node differences between two settlements."""

    pre_scenario: str
    post_scenario: str
    bill_delta_usd: dict         # consumer id -> post - pre
    revenue_delta_usd: dict      # prosumer id -> post - pre
    dlmp_delta: dict             # (node, phase, t) -> post - pre, $/MWh
    curtailment_delta_mw: float
    voltage_delta_pu: dict       # (node, phase, t) -> post - pre
    total_cost_delta_usd: float
    total_cost_ratio: float


def compare(pre: SettlementReport, post: SettlementReport) -> DeltaReport:
    """Differences post minus pre; both settlements must share the agent sets."""
    pre_ids = {b.agent_id for b in pre.bills} | {r.agent_id for r in pre.revenues}
    post_ids = {b.agent_id for b in post.bills} | {r.agent_id for r in post.revenues}
    if pre_ids != post_ids:
        raise ValueError(
            f"mismatched agent sets: only-pre={sorted(pre_ids - post_ids)}, "
            f"only-post={sorted(post_ids - pre_ids)}"
        )

    bill_delta = {
        b.agent_id: post.bill_of(b.agent_id) - b.amount_usd for b in pre.bills
    }
    rev_delta = {
        r.agent_id: post.revenue_of(r.agent_id) - r.amount_usd for r in pre.revenues
    }
    dlmp_delta = {}
    for key, price in pre.dlmp.prices.items():
        if key in post.dlmp.prices:
            dlmp_delta[key] = post.dlmp.prices[key] - price
    volt_delta = {
        key: post.voltage_pu[key] - val
        for key, val in pre.voltage_pu.items()
        if key in post.voltage_pu
    }
    ratio = (
        post.total_cost_usd / pre.total_cost_usd
        if pre.total_cost_usd not in (0.0,)
        else float("inf")
    )
    return DeltaReport(
        pre_scenario=pre.scenario,
        post_scenario=post.scenario,
        bill_delta_usd=bill_delta,
        revenue_delta_usd=rev_delta,
        dlmp_delta=dlmp_delta,
        curtailment_delta_mw=post.total_curtailment_mw - pre.total_curtailment_mw,
        voltage_delta_pu=volt_delta,
        total_cost_delta_usd=post.total_cost_usd - pre.total_cost_usd,
        total_cost_ratio=ratio,
    )
