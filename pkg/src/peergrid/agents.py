"""Market participants: prosumers and consumers, loaded from an agents file.

All power fields in the file are physical and *per connected phase*
(kW / kvar / kVA per phase); conversion to pu happens at load time against
the feeder base.

File schema (JSON)::

    {
      "prosumers": [{"id": "pv3", "node": 3, "phases": ["a","b","c"],
                     "p_min_kw": 0.0, "p_max_kw": 650.0,
                     "q_min_kvar": -200.0, "q_max_kvar": 200.0,
                     "s_inv_kva": 650.0, "offer_usd_per_mwh": 35.0}, ...],
      "consumers": [{"id": "load4", "node": 4, "phases": ["a","b","c"],
                     "utility_usd_per_mwh": 0.0,
                     "demand_source": "feeder"},
                    {"id": "flex1", "node": 2, "phases": ["a"],
                     "utility_usd_per_mwh": 40.0,
                     "demand_source": "explicit",
                     "demand_min_kw": 0.0, "demand_max_kw": 50.0}, ...]
    }

``demand_source: "feeder"`` binds the consumer's cleared demand to its node's
feeder load (inelastic; curtailment at the node reduces it one-for-one).
``demand_source: "explicit"`` adds an elastic per-phase demand that withdraws
at the node and clears between demand_min_kw and demand_max_kw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .feeder import PHASE_INDEX, Feeder, energized_phases


class AgentError(ValueError):
    """Raised for malformed or inconsistent agent definitions."""


@dataclass(frozen=True)
class Prosumer:
    id: str
    node: int
    phases: tuple[int, ...]
    p_min: float               # pu per phase
    p_max: float
    q_min: float
    q_max: float
    s_inv: float               # pu per phase, inverter apparent rating
    offer_price: float         # $/MWh

    def __post_init__(self):
        if not self.phases:
            raise AgentError(f"prosumer {self.id}: empty phase set")
        if self.p_min > self.p_max or self.q_min > self.q_max:
            raise AgentError(f"prosumer {self.id}: min bound exceeds max bound")
        if self.s_inv <= 0:
            raise AgentError(f"prosumer {self.id}: s_inv must be > 0")


@dataclass(frozen=True)
class Consumer:
    id: str
    node: int
    phases: tuple[int, ...]
    utility_price: float       # $/MWh
    demand_source: str         # "feeder" | "explicit"
    demand_min: float = 0.0    # pu per phase (explicit only)
    demand_max: float = 0.0

    def __post_init__(self):
        if not self.phases:
            raise AgentError(f"consumer {self.id}: empty phase set")
        if self.demand_source not in ("feeder", "explicit"):
            raise AgentError(
                f"consumer {self.id}: demand_source must be 'feeder' or 'explicit'"
            )
        if self.demand_min > self.demand_max:
            raise AgentError(f"consumer {self.id}: demand_min exceeds demand_max")


@dataclass(frozen=True)
class AgentSet:
    prosumers: tuple[Prosumer, ...]
    consumers: tuple[Consumer, ...]

    def prosumer(self, agent_id: str) -> Prosumer:
        for p in self.prosumers:
            if p.id == agent_id:
                return p
        raise KeyError(f"unknown prosumer {agent_id!r}")

    def consumer(self, agent_id: str) -> Consumer:
        for c in self.consumers:
            if c.id == agent_id:
                return c
        raise KeyError(f"unknown consumer {agent_id!r}")

    def replace_prosumer(self, updated: Prosumer) -> "AgentSet":
        return replace(
            self,
            prosumers=tuple(updated if p.id == updated.id else p for p in self.prosumers),
        )


def _phase_tuple(raw, who: str) -> tuple[int, ...]:
    try:
        return tuple(sorted(PHASE_INDEX[p] for p in raw))
    except KeyError as exc:
        raise AgentError(f"{who}: unknown phase {exc}") from None


def parse_agents(data: dict, feeder: Feeder, source: str = "<memory>") -> AgentSet:
    """Decode and validate agents against the feeder they live on."""
    base = feeder.network.base
    node_phases = energized_phases(feeder)

    prosumers = []
    for raw in data.get("prosumers", []):
        pid = str(raw["id"])
        node = int(raw["node"])
        if node not in node_phases:
            raise AgentError(f"prosumer {pid}: references unknown node {node}")
        phases = _phase_tuple(raw["phases"], f"prosumer {pid}")
        missing = [p for p in phases if p not in node_phases[node]]
        if missing:
            raise AgentError(
                f"prosumer {pid}: phases not energized at node {node}: {missing}"
            )
        prosumers.append(
            Prosumer(
                id=pid,
                node=node,
                phases=phases,
                p_min=float(base.power_to_pu(raw.get("p_min_kw", 0.0))),
                p_max=float(base.power_to_pu(raw["p_max_kw"])),
                q_min=float(base.power_to_pu(raw.get("q_min_kvar", 0.0))),
                q_max=float(base.power_to_pu(raw.get("q_max_kvar", 0.0))),
                s_inv=float(base.power_to_pu(raw["s_inv_kva"])),
                offer_price=float(raw["offer_usd_per_mwh"]),
            )
        )

    consumers = []
    for raw in data.get("consumers", []):
        cid = str(raw["id"])
        node = int(raw["node"])
        if node not in node_phases:
            raise AgentError(f"consumer {cid}: references unknown node {node}")
        phases = _phase_tuple(raw["phases"], f"consumer {cid}")
        missing = [p for p in phases if p not in node_phases[node]]
        if missing:
            raise AgentError(
                f"consumer {cid}: phases not energized at node {node}: {missing}"
            )
        source_kind = str(raw.get("demand_source", "feeder"))
        consumers.append(
            Consumer(
                id=cid,
                node=node,
                phases=phases,
                utility_price=float(raw.get("utility_usd_per_mwh", 0.0)),
                demand_source=source_kind,
                demand_min=float(base.power_to_pu(raw.get("demand_min_kw", 0.0))),
                demand_max=float(base.power_to_pu(raw.get("demand_max_kw", 0.0))),
            )
        )

    ids = [a.id for a in prosumers] + [a.id for a in consumers]
    dupes = {i for i in ids if ids.count(i) > 1}
    if dupes:
        raise AgentError(f"duplicate agent ids: {sorted(dupes)}")

    return AgentSet(prosumers=tuple(prosumers), consumers=tuple(consumers))


def vacuous_bounds(agents: AgentSet) -> tuple[str, ...]:
    """Prosumer ids whose P box extends beyond the inverter cone.

    Advisory only: the cone still governs, but such bounds can never bind.
    """
    return tuple(
        p.id for p in agents.prosumers if max(abs(p.p_max), abs(p.p_min)) > p.s_inv
    )


def load_agents(path: str | Path, feeder: Feeder) -> AgentSet:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise AgentError(f"{path}: not valid JSON ({exc})") from None
    return parse_agents(data, feeder, source=str(path))
