"""peergrid: P2P energy trading co-optimized with three-phase unbalanced
distribution network flow, plus adversarial-agent scenario analysis."""

from .agents import AgentSet, Consumer, Prosumer
from .assembly import DLMPSurface, assemble, extract_dlmp
from .feeder import Feeder, Line, Network, NodeLoad, VoltageBounds, load_feeder
from .runner import CompareResult, RunConfig, RunResult, run_compare, run_file, run_spec
from .scenario import AttackSpec, PreparedScenario, ScenarioSpec, load_scenario, prepare
from .settlement import DeltaReport, SettlementReport, compare, compute_settlement
from .solver import Solution, solve

__version__ = "0.1.0"

__all__ = [
    "AgentSet",
    "AttackSpec",
    "CompareResult",
    "Consumer",
    "DLMPSurface",
    "DeltaReport",
    "Feeder",
    "Line",
    "Network",
    "NodeLoad",
    "PreparedScenario",
    "Prosumer",
    "RunConfig",
    "RunResult",
    "ScenarioSpec",
    "SettlementReport",
    "Solution",
    "VoltageBounds",
    "assemble",
    "compare",
    "compute_settlement",
    "extract_dlmp",
    "load_feeder",
    "load_scenario",
    "prepare",
    "run_compare",
    "run_file",
    "run_spec",
    "solve",
]
