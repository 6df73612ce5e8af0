"""Scenario definition and preparation.

A scenario file names a feeder and an agents file (paths relative to the
scenario file, or inline JSON objects when driven through the service),
plus pricing, horizon and an ordered attack list::

    {
      "name": "base",
      "feeder": "ieee13_mod.json",
      "agents": "agents_ieee13.json",
      "horizon": 1,
      "voll_usd_per_mwh": 2000.0,
      "substation_usd_per_mwh": 50.0,
      "attacks": [{"kind": "price_tamper", "target": "pv13", "param": 45.0}]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .agents import AgentSet, load_agents, parse_agents
from .feeder import Feeder, NodeLoad, load_feeder, parse_feeder


class ScenarioError(ValueError):
    """Raised for malformed scenarios or invalid attack lists."""


@dataclass(frozen=True)
class AttackSpec:
    kind: str                  # price_tamper | demand_inflation | line_outage
    target: str                # agent id or line id
    param: float | None = None

    KINDS = ("price_tamper", "demand_inflation", "line_outage")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ScenarioError(f"unknown attack kind {self.kind!r}")
        if self.kind == "price_tamper" and (self.param is None or self.param <= 0):
            raise ScenarioError("price_tamper needs a positive price")
        if self.kind == "demand_inflation" and (self.param is None or self.param <= 0):
            raise ScenarioError("demand_inflation needs a positive factor")


@dataclass(frozen=True)
class ScenarioSpec:
    feeder: str | dict
    agents: str | dict
    horizon: int = 1
    voll: float = 2000.0
    substation_price: float = 50.0
    attacks: tuple[AttackSpec, ...] = ()
    name: str = "scenario"
    base_dir: Path | None = None


@dataclass(frozen=True)
class PreparedScenario:
    """Loaded, validated inputs ready for assembly.

    ``loads_reported`` is what the optimizer clears on; information attacks
    mutate it while ``loads_true`` keeps the pre-attack metered values.
    """

    name: str
    feeder: Feeder
    agents: AgentSet
    horizon: int
    voll: float
    substation_price: float
    loads_true: dict[int, NodeLoad]
    loads_reported: dict[int, NodeLoad]
    attacks_applied: tuple[str, ...] = ()
    step_hours: float = 1.0

    @property
    def money_scale(self) -> float:
        """MWh represented by 1 pu of per-phase power over one step."""
        return self.feeder.network.base.mw * self.step_hours

    def with_feeder(self, feeder: Feeder, note: str) -> "PreparedScenario":
        return replace(self, feeder=feeder, attacks_applied=self.attacks_applied + (note,))

    def with_agents(self, agents: AgentSet, note: str) -> "PreparedScenario":
        return replace(self, agents=agents, attacks_applied=self.attacks_applied + (note,))

    def with_reported_loads(self, loads, note: str) -> "PreparedScenario":
        return replace(
            self, loads_reported=loads, attacks_applied=self.attacks_applied + (note,)
        )


def parse_scenario(data: dict, base_dir: Path | None = None, name: str | None = None) -> ScenarioSpec:
    try:
        feeder = data["feeder"]
        agents = data["agents"]
    except KeyError as exc:
        raise ScenarioError(f"scenario missing required key {exc}") from None
    attacks = tuple(
        AttackSpec(
            kind=str(a["kind"]),
            target=str(a["target"]),
            param=None if a.get("param") is None else float(a["param"]),
        )
        for a in data.get("attacks", [])
    )
    horizon = int(data.get("horizon", 1))
    if horizon < 1:
        raise ScenarioError(f"horizon must be >= 1, got {horizon}")
    return ScenarioSpec(
        feeder=feeder,
        agents=agents,
        horizon=horizon,
        voll=float(data.get("voll_usd_per_mwh", 2000.0)),
        substation_price=float(data.get("substation_usd_per_mwh", 50.0)),
        attacks=attacks,
        name=str(data.get("name", name or "scenario")),
        base_dir=base_dir,
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return parse_scenario(data, base_dir=path.parent, name=path.stem)


def prepare(spec: ScenarioSpec) -> PreparedScenario:
    """Load feeder and agents; attacks are applied separately and purely."""
    if spec.horizon < 1:
        raise ScenarioError(f"horizon must be >= 1, got {spec.horizon}")
    if isinstance(spec.feeder, dict):
        feeder = parse_feeder(spec.feeder)
    else:
        fpath = Path(spec.feeder)
        if not fpath.is_absolute() and spec.base_dir is not None:
            fpath = spec.base_dir / fpath
        feeder = load_feeder(fpath)

    if isinstance(spec.agents, dict):
        agents = parse_agents(spec.agents, feeder)
    else:
        apath = Path(spec.agents)
        if not apath.is_absolute() and spec.base_dir is not None:
            apath = spec.base_dir / apath
        agents = load_agents(apath, feeder)

    return PreparedScenario(
        name=spec.name,
        feeder=feeder,
        agents=agents,
        horizon=spec.horizon,
        voll=spec.voll,
        substation_price=spec.substation_price,
        loads_true=dict(feeder.loads),
        loads_reported=dict(feeder.loads),
    )
