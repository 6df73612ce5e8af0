"""Shared fixtures: bundled scenario runs (session-scoped) and small feeders."""

from __future__ import annotations

from pathlib import Path

import pytest

from peergrid.runner import run_file

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "peergrid" / "data"
SCENARIO_DIR = DATA_DIR / "scenarios"

Z_BASE = (4.16e3) ** 2 / (3.0 * 1000e3)  # ohm, at 1000 kVA/phase and 4.16 kV


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.json"


@pytest.fixture(scope="session")
def pre_run():
    return run_file(scenario_path("ieee13_pre"))


@pytest.fixture(scope="session")
def coord_run():
    return run_file(scenario_path("ieee13_coord_attack"))


@pytest.fixture(scope="session")
def lineout_run():
    return run_file(scenario_path("ieee13_lineout"))


def two_node_feeder(
    r_pu: float = 0.01,
    x_pu: float = 0.0,
    p_kw: float = 500.0,
    q_kvar: float = 0.0,
    s_limit: float = 5000.0,
    v_band: tuple[float, float] = (0.9, 1.1),
) -> dict:
    """Single-phase analog: substation 1, load node 2, one phase-a line."""
    return {
        "base_kva": 1000.0,
        "base_kv": 4.16,
        "v_min": v_band[0],
        "v_max": v_band[1],
        "substation": 1,
        "nodes": [
            {"id": 1},
            {"id": 2, "loads": {"a": {"p": p_kw, "q": q_kvar}}},
        ],
        "lines": [
            {
                "from": 1,
                "to": 2,
                "R": [[r_pu * Z_BASE, 0, 0], [0, 0, 0], [0, 0, 0]],
                "X": [[x_pu * Z_BASE, 0, 0], [0, 0, 0], [0, 0, 0]],
                "s_limit": s_limit,
                "i_max": 2000.0,
                "phases": ["a"],
            }
        ],
    }


def copper_plate_feeder(loads: dict[int, dict], n_nodes: int = 2) -> dict:
    """Zero-impedance star from the substation; loads keyed by node id."""
    zero = [[0.0] * 3 for _ in range(3)]
    nodes = [{"id": 1}]
    lines = []
    for nid in range(2, n_nodes + 1):
        entry = {"id": nid}
        if nid in loads:
            entry["loads"] = loads[nid]
        nodes.append(entry)
        lines.append(
            {
                "from": 1,
                "to": nid,
                "R": zero,
                "X": zero,
                "s_limit": 100000.0,
                "i_max": 100000.0,
                "phases": ["a", "b", "c"],
            }
        )
    return {
        "base_kva": 1000.0,
        "base_kv": 4.16,
        "v_min": 0.9,
        "v_max": 1.1,
        "substation": 1,
        "nodes": nodes,
        "lines": lines,
    }


def no_agents() -> dict:
    return {"prosumers": [], "consumers": []}
