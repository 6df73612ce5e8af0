"""Peer-to-peer trading block: bilateral trade variables, per-phase dispatch
aggregation, demand bounds, inverter cones, and the welfare objective.

Each bilateral trade is one non-negative variable ``trade[s, j, phase, t]``
(seller to consumer); the buyer-side quantity is its negation by construction,
so the pairwise balance holds identically. Two reserved counterparties close
the books against the physical layer:

* ``upstream`` sells to consumers on behalf of the substation; assembly caps
  its total per-phase sales by the substation import.
* ``operator`` buys prosumer output that no consumer absorbs (loss
  procurement); the purchase is paid through the prosumer's offer cost and
  shows up physically as injection covering line losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .agents import AgentSet
from .conic import ProblemBuilder

UPSTREAM = "upstream"
OPERATOR = "operator"
RESERVED_IDS = (UPSTREAM, OPERATOR)

# tiny cost on the loss-procurement channel: bounds the dual ray that
# loss-free corner cases otherwise leave open, without measurably changing
# any dispatch (1e-6 $/MWh against price spreads of tens of $/MWh)
CHANNEL_EPS = 1e-6


@dataclass(frozen=True)
class MarketBlock:
    """What the market contributed to the problem, for coupling and reports."""

    trade_keys: tuple[tuple, ...]          # ("trade", seller, buyer, phase, t)
    advisories: tuple[str, ...]


def inverter_cone(p: float, q: float, s_inv: float) -> float:
    """Feasibility residual of the inverter rating: s_inv - sqrt(p^2 + q^2).

    Non-negative iff (p, q) is within the apparent-power cone.
    """
    if s_inv <= 0:
        raise ValueError(f"s_inv must be > 0, got {s_inv}")
    return s_inv - math.hypot(p, q)


def add_market_block(
    b: ProblemBuilder,
    agents: AgentSet,
    horizon: int,
    money_scale: float,
) -> MarketBlock:
    """Emit trading variables, constraints and cost terms into the builder.

    ``money_scale`` converts 1 pu over one step into MWh so that prices in
    $/MWh produce objective terms in dollars.
    """
    for agent_id in [a.id for a in agents.prosumers] + [a.id for a in agents.consumers]:
        if agent_id in RESERVED_IDS:
            raise ValueError(f"agent id {agent_id!r} is reserved")

    advisories = []
    for p in agents.prosumers:
        for c in agents.consumers:
            if p.node == c.node and set(p.phases) & set(c.phases):
                advisories.append(
                    f"prosumer {p.id} and consumer {c.id} share node {p.node}"
                )

    trade_keys: list[tuple] = []

    for t in range(horizon):
        # dispatch, reactive support and demand variables
        for p in agents.prosumers:
            for ph in p.phases:
                b.variable(("pp", p.id, ph, t), lb=max(0.0, p.p_min), ub=p.p_max)
                b.variable(("qp", p.id, ph, t), lb=p.q_min, ub=p.q_max)
                b.add_cost(("pp", p.id, ph, t), p.offer_price * money_scale)
        for c in agents.consumers:
            for ph in c.phases:
                if c.demand_source == "explicit":
                    b.variable(("dem", c.id, ph, t), lb=c.demand_min, ub=c.demand_max)
                else:
                    b.variable(("dem", c.id, ph, t), lb=0.0)
                if c.utility_price:
                    b.add_cost(("dem", c.id, ph, t), -c.utility_price * money_scale)

        # one trade variable per (seller, consumer) pair per common phase
        for c in agents.consumers:
            for ph in c.phases:
                for p in agents.prosumers:
                    if ph in p.phases:
                        key = ("trade", p.id, c.id, ph, t)
                        b.variable(key, lb=0.0)
                        trade_keys.append(key)
                key = ("trade", UPSTREAM, c.id, ph, t)
                b.variable(key, lb=0.0)
                trade_keys.append(key)
        for p in agents.prosumers:
            for ph in p.phases:
                key = ("trade", p.id, OPERATOR, ph, t)
                b.variable(key, lb=0.0)
                b.add_cost(key, CHANNEL_EPS * money_scale)
                trade_keys.append(key)

        # per-phase dispatch equals the sum of that prosumer's sales
        for p in agents.prosumers:
            for ph in p.phases:
                terms = {("pp", p.id, ph, t): 1.0}
                for c in agents.consumers:
                    if ph in c.phases:
                        terms[("trade", p.id, c.id, ph, t)] = -1.0
                terms[("trade", p.id, OPERATOR, ph, t)] = -1.0
                b.add_eq(terms, 0.0, label=("trade_agg", t, p.id, ph))

        # cleared demand equals the sum of purchases, magnitude form
        for c in agents.consumers:
            for ph in c.phases:
                terms = {("dem", c.id, ph, t): 1.0}
                for p in agents.prosumers:
                    if ph in p.phases:
                        terms[("trade", p.id, c.id, ph, t)] = -1.0
                terms[("trade", UPSTREAM, c.id, ph, t)] = -1.0
                b.add_eq(terms, 0.0, label=("dem_link", t, c.id, ph))

        # inverter apparent-power cone per prosumer phase
        for p in agents.prosumers:
            for ph in p.phases:
                b.add_soc(
                    [
                        b.affine({}, p.s_inv),
                        b.affine({("pp", p.id, ph, t): 1.0}),
                        b.affine({("qp", p.id, ph, t): 1.0}),
                    ],
                    label=("inv_cone", t, p.id, ph),
                )

    return MarketBlock(trade_keys=tuple(trade_keys), advisories=tuple(advisories))
