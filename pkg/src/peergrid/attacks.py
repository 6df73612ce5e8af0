"""Adversarial-agent and physical attacks as pure input transformations.

Each transform takes a prepared scenario and returns a new one; the base
scenario is never mutated, so pre/post solves always run from independent
inputs. Information attacks (price tamper, demand inflation) leave the
network untouched; a line outage flips one line out of service and may
island part of the feeder, which downstream layers serve with local
generation plus curtailment.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .feeder import NodeLoad
from .scenario import AttackSpec, PreparedScenario, ScenarioError


def apply_price_tamper(
    prepared: PreparedScenario, prosumer_id: str, new_price: float
) -> PreparedScenario:
    """Replace one prosumer's offer price; all physical data untouched."""
    pros = prepared.agents.prosumer(prosumer_id)  # KeyError for unknown agent
    if new_price <= 0:
        raise ScenarioError(f"price_tamper on {prosumer_id}: price must be > 0")
    updated = replace(pros, offer_price=float(new_price))
    agents = prepared.agents.replace_prosumer(updated)
    return prepared.with_agents(
        agents, f"price_tamper:{prosumer_id}->{new_price:g}"
    )


def apply_demand_inflation(
    prepared: PreparedScenario, consumer_id: str, factor: float
) -> PreparedScenario:
    """Scale one consumer's reported demand on all of its phases.

    Feeder-bound consumers report through their node's load, so the reported
    (cleared) load table changes while the true table keeps metered values.
    """
    cons = prepared.agents.consumer(consumer_id)
    if factor <= 0:
        raise ScenarioError(f"demand_inflation on {consumer_id}: factor must be > 0")

    if cons.demand_source == "explicit":
        updated = replace(
            cons,
            demand_min=cons.demand_min * factor,
            demand_max=cons.demand_max * factor,
        )
        agents = replace(
            prepared.agents,
            consumers=tuple(
                updated if c.id == consumer_id else c for c in prepared.agents.consumers
            ),
        )
        return prepared.with_agents(
            agents, f"demand_inflation:{consumer_id}x{factor:g}"
        )

    loads = dict(prepared.loads_reported)
    old = loads.get(cons.node)
    if old is None:
        raise ScenarioError(
            f"demand_inflation on {consumer_id}: node {cons.node} has no load"
        )
    p = np.array(old.p)
    q = np.array(old.q)
    for ph in cons.phases:
        p[ph] *= factor
        q[ph] *= factor
    p.setflags(write=False)
    q.setflags(write=False)
    loads[cons.node] = NodeLoad(cons.node, p, q)
    return prepared.with_reported_loads(
        loads, f"demand_inflation:{consumer_id}x{factor:g}"
    )


def apply_line_outage(prepared: PreparedScenario, line_id: str) -> PreparedScenario:
    """Flip one line out of service. Islanding is permitted; the islanded
    subtree is served only by local prosumers and shedding."""
    network = prepared.feeder.network.with_line_out(line_id)  # raises for unknown/double
    feeder = replace(prepared.feeder, network=network)
    return prepared.with_feeder(feeder, f"line_outage:{line_id}")


def apply_attacks(
    prepared: PreparedScenario, attacks: tuple[AttackSpec, ...]
) -> PreparedScenario:
    """Apply an ordered attack list; rejects duplicate targets."""
    targets = [(a.kind, a.target) for a in attacks]
    seen = set()
    for kind, target in targets:
        if target in seen:
            raise ScenarioError(f"multiple attacks target {target!r}")
        seen.add(target)

    out = prepared
    for atk in attacks:
        if atk.kind == "price_tamper":
            out = apply_price_tamper(out, atk.target, atk.param)
        elif atk.kind == "demand_inflation":
            out = apply_demand_inflation(out, atk.target, atk.param)
        elif atk.kind == "line_outage":
            out = apply_line_outage(out, atk.target)
        else:  # pragma: no cover - AttackSpec already validates
            raise ScenarioError(f"unknown attack kind {atk.kind!r}")
    return out
