"""Three-phase radial feeder model: file ingestion, per-unit scaling, topology checks.

Feeder files carry physical units (kW, kvar, ohm, amps); everything is converted
to per-unit at load time and kept immutable afterwards.

File schema (JSON)::

    {
      "base_kva": 1000.0,          # per-phase power base
      "base_kv": 4.16,             # line-to-line voltage base
      "v_min": 0.95, "v_max": 1.05,
      "substation": 1,
      "nodes": [{"id": 1, "loads": {"a": {"p": 160.0, "q": 110.0}, ...}}, ...],
      "lines": [{"from": 1, "to": 2,
                 "R": [[...3x3 ohm...]], "X": [[...3x3 ohm...]],
                 "s_limit": 2500.0,          # per-phase apparent limit, kVA
                 "i_max": 450.0,             # amps (optional, default 1e4)
                 "i_min": 0.0,               # amps (optional, default 0)
                 "phases": ["a","b","c"]},   # optional, derived from R/X diagonals
                ...]
    }
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

PHASES = ("a", "b", "c")
PHASE_INDEX = {"a": 0, "b": 1, "c": 2}


class FeederError(ValueError):
    """Base error for feeder ingestion problems."""


class FeederParseError(FeederError):
    """Raised when a feeder file is malformed (missing keys, bad shapes)."""


class FeederValidationError(FeederError):
    """Raised when a parsed feeder violates a structural invariant."""


@dataclass(frozen=True)
class PerUnitBase:
    """Per-unit bases; power is per phase, voltage is line-to-line."""

    s_kva: float
    v_kv: float

    def __post_init__(self):
        if self.s_kva <= 0:
            raise FeederValidationError(f"base_kva must be > 0, got {self.s_kva}")
        if self.v_kv <= 0:
            raise FeederValidationError(f"base_kv must be > 0, got {self.v_kv}")

    @property
    def z_ohm(self) -> float:
        # V_LN^2 / S_1ph expressed through line-to-line kV
        return (self.v_kv * 1e3) ** 2 / (3.0 * self.s_kva * 1e3)

    @property
    def i_amp(self) -> float:
        return self.s_kva * 1e3 / ((self.v_kv * 1e3) / np.sqrt(3.0))

    @property
    def mw(self) -> float:
        """MW corresponding to 1.0 pu of per-phase power."""
        return self.s_kva / 1e3

    def power_to_pu(self, kw):
        return np.asarray(kw, dtype=float) / self.s_kva

    def power_from_pu(self, pu):
        return np.asarray(pu, dtype=float) * self.s_kva

    def impedance_to_pu(self, ohm):
        return np.asarray(ohm, dtype=float) / self.z_ohm

    def impedance_from_pu(self, pu):
        return np.asarray(pu, dtype=float) * self.z_ohm

    def current_to_pu(self, amp):
        return np.asarray(amp, dtype=float) / self.i_amp


@dataclass(frozen=True, eq=False)
class Line:
    """Directed line segment (parent -> child after normalization).

    Impedance matrices are 3x3 phase matrices in pu; rows/columns of absent
    phases are zero. ``phases`` holds the indices (0,1,2) the line carries.
    """

    from_node: int
    to_node: int
    r: np.ndarray
    x: np.ndarray
    s_limit: np.ndarray        # per-phase apparent-power limit, pu
    i_min_sq: float            # bound on squared current magnitude, pu^2
    i_max_sq: float
    phases: tuple[int, ...]
    in_service: bool = True

    @property
    def id(self) -> str:
        return f"{self.from_node}-{self.to_node}"

    def ideal_phases(self) -> tuple[int, ...]:
        """Phases carried with identically zero impedance rows (copper plate)."""
        out = []
        for p in self.phases:
            if not self.r[p].any() and not self.x[p].any():
                out.append(p)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class NodeLoad:
    """Per-phase spot load at one node, pu. Arrays are length 3."""

    node: int
    p: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class VoltageBounds:
    v_min: float = 0.95
    v_max: float = 1.05

    def __post_init__(self):
        if not (0 < self.v_min < self.v_max):
            raise FeederValidationError(
                f"voltage bounds must satisfy 0 < v_min < v_max, got "
                f"[{self.v_min}, {self.v_max}]"
            )

    @property
    def v_min_sq(self) -> float:
        return self.v_min**2

    @property
    def v_max_sq(self) -> float:
        return self.v_max**2


@dataclass(frozen=True, eq=False)
class Network:
    """Validated radial three-phase network in per-unit."""

    nodes: tuple[int, ...]
    lines: tuple[Line, ...]
    substation: int
    base: PerUnitBase

    def line_by_id(self, line_id: str) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(f"unknown line {line_id!r}")

    def in_service_lines(self) -> tuple[Line, ...]:
        return tuple(ln for ln in self.lines if ln.in_service)

    def with_line_out(self, line_id: str) -> "Network":
        """Copy of the network with one line flagged out of service."""
        target = self.line_by_id(line_id)
        if not target.in_service:
            raise FeederValidationError(f"line {line_id} is already out of service")
        new_lines = tuple(
            replace(ln, in_service=False) if ln.id == line_id else ln
            for ln in self.lines
        )
        return replace(self, lines=new_lines)


@dataclass(frozen=True, eq=False)
class Feeder:
    """Bundle returned by :func:`load_feeder`."""

    network: Network
    loads: dict[int, NodeLoad]
    voltage_bounds: VoltageBounds


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _parse_matrix(raw, what: str) -> np.ndarray:
    m = np.array(raw, dtype=float)
    if m.shape != (3, 3):
        raise FeederParseError(f"{what} must be a 3x3 matrix, got shape {m.shape}")
    return m


def parse_feeder(data: dict, source: str = "<memory>") -> Feeder:
    """Build a validated :class:`Feeder` from already-decoded JSON data."""
    try:
        base = PerUnitBase(float(data["base_kva"]), float(data["base_kv"]))
        substation = int(data["substation"])
        raw_nodes = data["nodes"]
        raw_lines = data["lines"]
    except KeyError as exc:
        raise FeederParseError(f"{source}: missing required key {exc}") from None

    vb = VoltageBounds(float(data.get("v_min", 0.95)), float(data.get("v_max", 1.05)))

    node_ids: list[int] = []
    loads: dict[int, NodeLoad] = {}
    for nd in raw_nodes:
        nid = int(nd["id"])
        if nid in loads:
            raise FeederParseError(f"{source}: duplicate node id {nid}")
        p = np.zeros(3)
        q = np.zeros(3)
        for ph, entry in (nd.get("loads") or {}).items():
            if ph not in PHASE_INDEX:
                raise FeederParseError(f"{source}: node {nid} has unknown phase {ph!r}")
            p[PHASE_INDEX[ph]] = float(entry.get("p", 0.0))
            q[PHASE_INDEX[ph]] = float(entry.get("q", 0.0))
        if (p < 0).any():
            raise FeederValidationError(f"node {nid}: active load must be >= 0")
        node_ids.append(nid)
        loads[nid] = NodeLoad(nid, _freeze(base.power_to_pu(p)), _freeze(base.power_to_pu(q)))

    lines: list[Line] = []
    for raw in raw_lines:
        f, t = int(raw["from"]), int(raw["to"])
        r_ohm = _parse_matrix(raw["R"], f"line {f}-{t} R")
        x_ohm = _parse_matrix(raw["X"], f"line {f}-{t} X")
        if (np.diag(r_ohm) < 0).any() or (np.diag(x_ohm) < 0).any():
            raise FeederValidationError(
                f"line {f}-{t}: impedance diagonal entries must be >= 0"
            )
        r = base.impedance_to_pu(r_ohm)
        x = base.impedance_to_pu(x_ohm)
        if "phases" in raw:
            phases = tuple(sorted(PHASE_INDEX[p] for p in raw["phases"]))
        else:
            diag = np.abs(np.diag(r)) + np.abs(np.diag(x))
            phases = tuple(int(i) for i in range(3) if diag[i] > 0)
        if not phases:
            raise FeederValidationError(f"line {f}-{t}: no phases carried")
        s_lim_kva = raw.get("s_limit", 0.0)
        s_lim = base.power_to_pu(np.full(3, float(s_lim_kva)))
        if float(s_lim_kva) <= 0:
            raise FeederValidationError(f"line {f}-{t}: s_limit must be > 0")
        i_max = base.current_to_pu(float(raw.get("i_max", 1e4)))
        i_min = base.current_to_pu(float(raw.get("i_min", 0.0)))
        if i_min < 0 or i_max <= i_min:
            raise FeederValidationError(
                f"line {f}-{t}: need 0 <= i_min < i_max, got [{i_min}, {i_max}]"
            )
        lines.append(
            Line(
                from_node=f,
                to_node=t,
                r=_freeze(r),
                x=_freeze(x),
                s_limit=_freeze(s_lim),
                i_min_sq=float(i_min) ** 2,
                i_max_sq=float(i_max) ** 2,
                phases=phases,
            )
        )

    network = _validate_topology(node_ids, lines, substation, base)
    feeder = Feeder(network=network, loads=loads, voltage_bounds=vb)
    _validate_phase_consistency(feeder)
    return feeder


def load_feeder(path: str | Path) -> Feeder:
    """Load and validate a feeder file. Raises FeederParseError / FeederValidationError."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FeederParseError(f"{path}: not valid JSON ({exc})") from None
    return parse_feeder(data, source=str(path))


def _validate_topology(node_ids, lines, substation, base) -> Network:
    nodes = tuple(sorted(node_ids))
    if substation not in node_ids:
        raise FeederValidationError(f"substation node {substation} not in node list")
    if len(lines) != len(nodes) - 1:
        raise FeederValidationError(
            f"radial network needs |lines| = |nodes| - 1, got "
            f"{len(lines)} lines for {len(nodes)} nodes"
        )

    adj: dict[int, list[tuple[int, int]]] = {n: [] for n in nodes}
    for k, ln in enumerate(lines):
        for end in (ln.from_node, ln.to_node):
            if end not in adj:
                raise FeederValidationError(f"line {ln.id} references unknown node {end}")
        adj[ln.from_node].append((ln.to_node, k))
        adj[ln.to_node].append((ln.from_node, k))

    # BFS from the substation; orient every line parent -> child.
    parent: dict[int, int | None] = {substation: None}
    order = deque([substation])
    oriented: list[Line] = [None] * len(lines)  # type: ignore[list-item]
    while order:
        u = order.popleft()
        for v, k in adj[u]:
            if v in parent:
                if oriented[k] is None:
                    # second traversal of an unused edge between visited nodes = cycle
                    raise FeederValidationError(
                        f"cycle detected through line {lines[k].id}"
                    )
                continue
            parent[v] = u
            ln = lines[k]
            if ln.from_node != u:
                ln = replace(ln, from_node=u, to_node=ln.from_node)
            oriented[k] = ln
            order.append(v)

    unreachable = [n for n in nodes if n not in parent]
    if unreachable:
        raise FeederValidationError(
            f"nodes not reachable from substation {substation}: {unreachable}"
        )
    return Network(
        nodes=nodes,
        lines=tuple(oriented),
        substation=substation,
        base=base,
    )


def energized_phases(feeder: Feeder) -> dict[int, tuple[int, ...]]:
    """Phases present at each node, propagated from the substation along lines.

    Uses the static topology (out-of-service lines still define which phases
    a node has), so islanded nodes keep their phase sets. At the substation
    the set is what its child lines carry plus any local load; a phase
    serving nothing at all has no meaningful price and is reported nowhere.
    """
    network = feeder.network
    children = downstream_sets(network)
    root = set()
    for ln in children[network.substation]:
        root.update(ln.phases)
    sub_load = feeder.loads.get(network.substation)
    if sub_load is not None:
        root.update(p for p in range(3) if sub_load.p[p] or sub_load.q[p])
    out: dict[int, tuple[int, ...]] = {network.substation: tuple(sorted(root))}
    order = deque([network.substation])
    while order:
        u = order.popleft()
        for ln in children[u]:
            out[ln.to_node] = tuple(p for p in out[u] if p in ln.phases)
            order.append(ln.to_node)
    return out


def _validate_phase_consistency(feeder: Feeder) -> None:
    phases = energized_phases(feeder)
    for nid, load in sorted(feeder.loads.items()):
        for p in range(3):
            if (load.p[p] != 0 or load.q[p] != 0) and p not in phases[nid]:
                raise FeederValidationError(
                    f"node {nid}: load on phase {PHASES[p]} but that phase does "
                    f"not reach the node"
                )


def downstream_sets(network: Network) -> dict[int, tuple[Line, ...]]:
    """Child lines per node: the line flows appearing in each node's balance."""
    out: dict[int, list[Line]] = {n: [] for n in network.nodes}
    for ln in network.lines:
        out[ln.from_node].append(ln)
    return {n: tuple(lns) for n, lns in out.items()}


def parent_lines(network: Network) -> dict[int, Line | None]:
    """The single line feeding each node (None at the substation)."""
    out: dict[int, Line | None] = {n: None for n in network.nodes}
    for ln in network.lines:
        out[ln.to_node] = ln
    return out


def islanded_nodes(network: Network) -> set[int]:
    """Nodes with no in-service path to the substation."""
    children = downstream_sets(network)
    reached = {network.substation}
    order = deque([network.substation])
    while order:
        u = order.popleft()
        for ln in children[u]:
            if ln.in_service:
                reached.add(ln.to_node)
                order.append(ln.to_node)
    return set(network.nodes) - reached
