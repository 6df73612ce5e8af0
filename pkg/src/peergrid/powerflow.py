"""Three-phase branch-flow constraint block with conic relaxation.

Flows, squared currents and squared voltage magnitudes live on a radial
network; unbalanced phase coupling enters through effective impedance
matrices built from the balanced-rotation matrix (off-diagonal entries
e^{-j2pi/3} / e^{+j2pi/3}, unit modulus).

Per line and phase the block emits, for each time step:

* sending/receiving apparent-power limits as cones,
* the rotated-cone relaxation ||(2 f_p, 2 f_q, a - v_up)|| <= a + v_up,
* the linearized phase-coupled voltage drop with matrix products,
* squared voltage/current bounds and proportional load curtailment.

Lines whose impedance rows are identically zero on a phase (copper-plate
idealizations) carry flow with a fixed at zero and no relaxation cone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import AgentSet
from .conic import ProblemBuilder
from .feeder import (
    Feeder,
    Line,
    NodeLoad,
    downstream_sets,
    islanded_nodes,
    parent_lines,
)

# balanced phase-rotation matrix: row r, column c holds e^{j(theta_c - theta_r)}
_W = np.exp(-2j * np.pi / 3.0)
ALPHA = np.array(
    [
        [1.0 + 0j, _W, np.conj(_W)],
        [np.conj(_W), 1.0 + 0j, _W],
        [_W, np.conj(_W), 1.0 + 0j],
    ]
)


@dataclass(frozen=True, eq=False)
class TildeImpedance:
    """Phase-coupled effective impedances for the voltage-drop equation."""

    r: np.ndarray    # 3x3, pu
    x: np.ndarray    # 3x3, pu
    z2: np.ndarray   # 3x3, pu^2, elementwise |R + jX|^2


def compute_tilde(line_or_r, x=None) -> TildeImpedance:
    """Effective impedance matrices for one line (or raw R, X matrices).

    R_eff = Re{alpha .* (R + jX)}, X_eff = Im{alpha .* (R + jX)}, and the
    squared-magnitude matrix is |R + jX|^2 elementwise. Diagonals of alpha
    are 1, so R_eff and X_eff preserve the R and X diagonals.
    """
    if x is None:
        r_mat, x_mat = line_or_r.r, line_or_r.x
    else:
        r_mat, x_mat = np.asarray(line_or_r, dtype=float), np.asarray(x, dtype=float)
    z = r_mat + 1j * x_mat
    m = ALPHA * z
    return TildeImpedance(r=m.real.copy(), x=m.imag.copy(), z2=np.abs(z) ** 2)


@dataclass(frozen=True)
class GridOptions:
    shedding: bool = True
    diag_loss: bool = False


@dataclass(frozen=True)
class GridBlock:
    """Bookkeeping the grid block leaves behind for coupling and reports."""

    flagged_islands: tuple[int, ...]


def _loss_terms(line: Line, mat: np.ndarray, phase: int, t: int, diag_loss: bool):
    """Affine terms of (M @ a)[phase] over the line's squared currents."""
    terms = {}
    cols = (phase,) if diag_loss else line.phases
    for c in cols:
        coeff = mat[phase, c]
        if coeff != 0.0:
            terms[("a", line.id, c, t)] = coeff
    return terms


def add_grid_block(
    b: ProblemBuilder,
    feeder: Feeder,
    agents: AgentSet,
    loads: dict[int, NodeLoad],
    horizon: int,
    voll: float,
    substation_price: float,
    money_scale: float,
    options: GridOptions = GridOptions(),
) -> GridBlock:
    """Emit grid variables, balances, cones and cost terms into the builder."""
    net = feeder.network
    vb = feeder.voltage_bounds
    children = downstream_sets(net)
    parents = parent_lines(net)
    sub = net.substation

    pros_at: dict[tuple[int, int], list] = {}
    for p in agents.prosumers:
        for ph in p.phases:
            pros_at.setdefault((p.node, ph), []).append(p)
    expl_at: dict[tuple[int, int], list] = {}
    for c in agents.consumers:
        if c.demand_source == "explicit":
            for ph in c.phases:
                expl_at.setdefault((c.node, ph), []).append(c)

    flagged = tuple(sorted(islanded_nodes(net)))
    tilde = {ln.id: compute_tilde(ln) for ln in net.lines}

    for t in range(horizon):
        # line-flow variables; out-of-service or absent phases pinned to zero
        for ln in net.lines:
            ideal = ln.ideal_phases()
            for ph in range(3):
                live = ln.in_service and ph in ln.phases
                if live:
                    b.variable(("fp", ln.id, ph, t))
                    b.variable(("fq", ln.id, ph, t))
                    if ph in ideal:
                        b.variable(("a", ln.id, ph, t), lb=0.0, ub=0.0)
                    else:
                        b.variable(("a", ln.id, ph, t), lb=ln.i_min_sq, ub=ln.i_max_sq)
                else:
                    b.variable(("fp", ln.id, ph, t), lb=0.0, ub=0.0)
                    b.variable(("fq", ln.id, ph, t), lb=0.0, ub=0.0)
                    b.variable(("a", ln.id, ph, t), lb=0.0, ub=0.0)

        # squared voltage magnitudes; slack bus pinned at 1.0
        for n in net.nodes:
            for ph in range(3):
                if n == sub:
                    b.variable(("v", n, ph, t), lb=1.0, ub=1.0)
                else:
                    b.variable(("v", n, ph, t), lb=vb.v_min_sq, ub=vb.v_max_sq)

        # substation import and per-node curtailment
        for ph in range(3):
            b.variable(("pug", ph, t), lb=0.0)
            b.variable(("qug", ph, t))
            b.add_cost(("pug", ph, t), substation_price * money_scale)
        # curtailment exists only where there is active load to curtail;
        # fixed zero-shed variables would leave degenerate dual faces behind
        for n in net.nodes:
            load = loads.get(n)
            for ph in range(3):
                p_load = float(load.p[ph]) if load is not None else 0.0
                q_load = float(load.q[ph]) if load is not None else 0.0
                if p_load <= 0.0:
                    continue
                ub_shd = p_load if options.shedding else 0.0
                b.variable(("pshd", n, ph, t), lb=0.0, ub=ub_shd)
                b.variable(("qshd", n, ph, t))
                b.add_eq(
                    {
                        ("qshd", n, ph, t): 1.0,
                        ("pshd", n, ph, t): -q_load / p_load,
                    },
                    0.0,
                    label=("qshd_tie", t, n, ph),
                )
                b.add_cost(("pshd", n, ph, t), voll * money_scale)

        # nodal active and reactive balance, one labeled row per node/phase
        for n in net.nodes:
            load = loads.get(n)
            for ph in range(3):
                p_terms: dict = {}
                q_terms: dict = {}
                parent = parents[n]
                if parent is not None and parent.in_service:
                    p_terms[("fp", parent.id, ph, t)] = 1.0
                    q_terms[("fq", parent.id, ph, t)] = 1.0
                    for key, coeff in _loss_terms(
                        parent, parent.r, ph, t, options.diag_loss
                    ).items():
                        p_terms[key] = p_terms.get(key, 0.0) - coeff
                    for key, coeff in _loss_terms(
                        parent, parent.x, ph, t, options.diag_loss
                    ).items():
                        q_terms[key] = q_terms.get(key, 0.0) - coeff
                if n == sub:
                    p_terms[("pug", ph, t)] = 1.0
                    q_terms[("qug", ph, t)] = 1.0
                for p in pros_at.get((n, ph), []):
                    p_terms[("pp", p.id, ph, t)] = 1.0
                    q_terms[("qp", p.id, ph, t)] = 1.0
                if load is not None and float(load.p[ph]) > 0.0:
                    p_terms[("pshd", n, ph, t)] = 1.0
                    q_terms[("qshd", n, ph, t)] = 1.0
                for c in expl_at.get((n, ph), []):
                    p_terms[("dem", c.id, ph, t)] = -1.0
                for ln in children[n]:
                    if ln.in_service:
                        p_terms[("fp", ln.id, ph, t)] = -1.0
                        q_terms[("fq", ln.id, ph, t)] = -1.0
                p_rhs = float(load.p[ph]) if load is not None else 0.0
                q_rhs = float(load.q[ph]) if load is not None else 0.0
                b.add_eq(p_terms, p_rhs, label=("p_balance", t, n, ph))
                b.add_eq(q_terms, q_rhs, label=("q_balance", t, n, ph))

        # voltage drop and flow cones per in-service line
        for ln in net.lines:
            if not ln.in_service:
                continue
            td = tilde[ln.id]
            ideal = set(ln.ideal_phases())
            for ph in range(3):
                terms = {
                    ("v", ln.to_node, ph, t): 1.0,
                    ("v", ln.from_node, ph, t): -1.0,
                }
                for c in ln.phases:
                    if td.r[ph, c] != 0.0:
                        terms[("fp", ln.id, c, t)] = terms.get(("fp", ln.id, c, t), 0.0) + 2.0 * td.r[ph, c]
                    if td.x[ph, c] != 0.0:
                        terms[("fq", ln.id, c, t)] = terms.get(("fq", ln.id, c, t), 0.0) + 2.0 * td.x[ph, c]
                    if td.z2[ph, c] != 0.0:
                        terms[("a", ln.id, c, t)] = terms.get(("a", ln.id, c, t), 0.0) - td.z2[ph, c]
                b.add_eq(terms, 0.0, label=("vdrop", t, ln.id, ph))

            for ph in ln.phases:
                s_lim = float(ln.s_limit[ph])
                # sending-end apparent-power limit
                b.add_soc(
                    [
                        b.affine({}, s_lim),
                        b.affine({("fp", ln.id, ph, t): 1.0}),
                        b.affine({("fq", ln.id, ph, t): 1.0}),
                    ],
                    label=("s_send", t, ln.id, ph),
                )
                # receiving-end limit: flow net of the loss terms
                p_loss = _loss_terms(ln, ln.r, ph, t, options.diag_loss)
                q_loss = _loss_terms(ln, ln.x, ph, t, options.diag_loss)
                b.add_soc(
                    [
                        b.affine({}, s_lim),
                        b.affine({("fp", ln.id, ph, t): 1.0, **{k: -v for k, v in p_loss.items()}}),
                        b.affine({("fq", ln.id, ph, t): 1.0, **{k: -v for k, v in q_loss.items()}}),
                    ],
                    label=("s_recv", t, ln.id, ph),
                )
                if ph in ideal:
                    continue
                # rotated-cone relaxation against the sending-end voltage
                b.add_soc(
                    [
                        b.affine({("a", ln.id, ph, t): 1.0, ("v", ln.from_node, ph, t): 1.0}),
                        b.affine({("fp", ln.id, ph, t): 2.0}),
                        b.affine({("fq", ln.id, ph, t): 2.0}),
                        b.affine({("a", ln.id, ph, t): 1.0, ("v", ln.from_node, ph, t): -1.0}),
                    ],
                    label=("flow_cone", t, ln.id, ph),
                )

    return GridBlock(flagged_islands=flagged)


@dataclass(frozen=True)
class TightnessReport:
    """Relative relaxation gaps (a * v_up - f_p^2 - f_q^2) per line phase."""

    gaps: dict            # (t, line_id, phase) -> relative gap
    max_gap: float
    mean_gap: float
    flagged: tuple        # entries with gap above the reporting threshold
    threshold: float = 1e-4


def check_soc_tightness(solution, feeder: Feeder, horizon: int,
                        threshold: float = 1e-4, eps: float = 1e-3) -> TightnessReport:
    """Measure how tight the conic relaxation is at the solved point.

    ``eps`` floors the denominator so near-zero flows (a*v at solver noise
    level) do not report as spurious looseness; 1e-3 pu^2 corresponds to an
    apparent flow of ~3% of base power.
    """
    gaps = {}
    for t in range(horizon):
        for ln in feeder.network.lines:
            if not ln.in_service:
                continue
            ideal = set(ln.ideal_phases())
            for ph in ln.phases:
                if ph in ideal:
                    gaps[(t, ln.id, ph)] = 0.0
                    continue
                a = solution.value(("a", ln.id, ph, t))
                v_up = solution.value(("v", ln.from_node, ph, t))
                fp = solution.value(("fp", ln.id, ph, t))
                fq = solution.value(("fq", ln.id, ph, t))
                prod = a * v_up
                gaps[(t, ln.id, ph)] = (prod - fp * fp - fq * fq) / max(prod, eps)
    if not gaps:
        return TightnessReport(gaps={}, max_gap=0.0, mean_gap=0.0, flagged=())
    values = list(gaps.values())
    flagged = tuple(sorted(k for k, g in gaps.items() if g > threshold))
    return TightnessReport(
        gaps=gaps,
        max_gap=float(max(values)),
        mean_gap=float(np.mean(values)),
        flagged=flagged,
        threshold=threshold,
    )
