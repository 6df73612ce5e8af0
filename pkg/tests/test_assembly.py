"""Joint assembly structure, determinism, and price extraction."""

import pytest

from peergrid.assembly import assemble, extract_dlmp
from peergrid.feeder import energized_phases
from peergrid.runner import RunConfig
from peergrid.scenario import ScenarioSpec, load_scenario, prepare
from peergrid.solver import solve

from .conftest import copper_plate_feeder, scenario_path, two_node_feeder
from .oracles import finite_difference_dlmp

NO_AGENTS = {"prosumers": [], "consumers": []}


def test_structural_counts_on_bundled_feeder(pre_run):
    problem = pre_run.assembled.problem
    prep = pre_run.prepared
    net = prep.feeder.network

    balance_labels = [l for l in problem.eq_label_index if l[0] == "p_balance"]
    assert len(balance_labels) == 3 * len(net.nodes)

    flow_cones = [c for c in problem.cones if c.label and c.label[0] == "flow_cone"]
    expected_flow = sum(
        len([p for p in ln.phases if p not in ln.ideal_phases()])
        for ln in net.lines
        if ln.in_service
    )
    assert len(flow_cones) == expected_flow

    inv_cones = [c for c in problem.cones if c.label and c.label[0] == "inv_cone"]
    assert len(inv_cones) == sum(len(p.phases) for p in prep.agents.prosumers)

    limit_cones = [c for c in problem.cones if c.label and c.label[0] in ("s_send", "s_recv")]
    assert len(limit_cones) == 2 * sum(len(ln.phases) for ln in net.lines if ln.in_service)


def test_variable_census_two_node():
    """Hand enumeration for the single-phase 2-node pure-OPF instance.

    Per time step: 3 phases x (fp, fq, a) on one line = 9 (phases b/c pinned
    at zero), squared voltages 2 x 3 = 6, substation import 3 + 3, and one
    (pshd, qshd) pair for the single loaded node-phase = 2. Total 23.
    """
    prep = prepare(ScenarioSpec(feeder=two_node_feeder(), agents=NO_AGENTS))
    problem = assemble(prep).problem
    assert problem.n_vars == 23
    kinds = {}
    for key in problem.var_keys:
        kinds[key[0]] = kinds.get(key[0], 0) + 1
    assert kinds == {"fp": 3, "fq": 3, "a": 3, "v": 6, "pug": 3, "qug": 3,
                     "pshd": 1, "qshd": 1}


def test_assembly_is_deterministic():
    spec = load_scenario(scenario_path("ieee13_pre"))
    p1 = assemble(prepare(spec)).problem
    p2 = assemble(prepare(spec)).problem
    assert p1.dump() == p2.dump()


def test_repeat_solve_objective_stable():
    spec = load_scenario(scenario_path("ieee13_pre"))
    obj = [solve(assemble(prepare(spec)).problem).objective_value for _ in range(2)]
    assert abs(obj[0] - obj[1]) <= 1e-9 * max(1.0, abs(obj[0]))


def test_dlmp_surface_complete_over_energized_pairs(pre_run):
    prep = pre_run.prepared
    surface = pre_run.settlement.dlmp
    phases = energized_phases(prep.feeder)
    expected = {
        (n, ph, 0) for n in prep.feeder.network.nodes for ph in phases[n]
    }
    assert set(surface.prices) == expected


def test_copper_plate_uniform_dlmp_at_offer_price():
    feeder = copper_plate_feeder(
        {2: {"a": {"p": 200.0, "q": 0.0}}, 3: {"a": {"p": 100.0, "q": 0.0}}},
        n_nodes=3,
    )
    feeder["nodes"][0]["loads"] = {"a": {"p": 40.0, "q": 0.0}}
    agents = {
        "prosumers": [{"id": "g", "node": 2, "phases": ["a"], "p_max_kw": 900.0,
                       "s_inv_kva": 1000.0, "offer_usd_per_mwh": 31.0}],
        "consumers": [
            {"id": "c1", "node": 1, "phases": ["a"], "demand_source": "feeder"},
            {"id": "c2", "node": 2, "phases": ["a"], "demand_source": "feeder"},
            {"id": "c3", "node": 3, "phases": ["a"], "demand_source": "feeder"},
        ],
    }
    prep = prepare(ScenarioSpec(feeder=feeder, agents=agents))
    sol = solve(assemble(prep).problem)
    dlmp = extract_dlmp(sol, prep)
    for node in (1, 2, 3):
        assert dlmp.at(node, 0) == pytest.approx(31.0, rel=1e-6)


def test_substation_dlmp_equals_import_price_when_importing():
    feeder = copper_plate_feeder({2: {"a": {"p": 500.0, "q": 0.0}}})
    prep = prepare(ScenarioSpec(feeder=feeder, agents=NO_AGENTS, substation_price=42.0))
    sol = solve(assemble(prep).problem)
    assert sol.value(("pug", 0, 0)) > 0.1
    dlmp = extract_dlmp(sol, prep)
    assert dlmp.at(1, 0) == pytest.approx(42.0, rel=1e-6)


@pytest.mark.parametrize("node,phase", [(2, 0), (7, 2), (9, 0)])
def test_finite_difference_matches_dual(pre_run, node, phase):
    prep = pre_run.prepared
    dlmp = pre_run.settlement.dlmp
    fd = finite_difference_dlmp(prep, node, phase, RunConfig())
    assert fd == pytest.approx(dlmp.at(node, phase), rel=0.01)


def test_price_scaling_covariance():
    """Scaling every price by k scales objective and DLMPs by k; the primal
    argmin is unchanged within solver tolerance."""
    k = 3.0
    feeder = two_node_feeder(p_kw=600.0, q_kvar=100.0)
    agents = {
        "prosumers": [{"id": "g", "node": 2, "phases": ["a"], "p_max_kw": 400.0,
                       "q_min_kvar": -100.0, "q_max_kvar": 100.0,
                       "s_inv_kva": 450.0, "offer_usd_per_mwh": 20.0}],
        "consumers": [{"id": "c", "node": 2, "phases": ["a"], "demand_source": "feeder"}],
    }
    base = prepare(ScenarioSpec(feeder=feeder, agents=agents,
                                substation_price=50.0, voll=2000.0))
    sol1 = solve(assemble(base).problem)

    agents_k = {
        "prosumers": [dict(agents["prosumers"][0], offer_usd_per_mwh=20.0 * k)],
        "consumers": agents["consumers"],
    }
    scaled = prepare(ScenarioSpec(feeder=feeder, agents=agents_k,
                                  substation_price=50.0 * k, voll=2000.0 * k))
    sol2 = solve(assemble(scaled).problem)

    assert sol2.objective_value == pytest.approx(k * sol1.objective_value, rel=1e-7)
    for key in (("pp", "g", 0, 0), ("pug", 0, 0), ("fp", "1-2", 0, 0)):
        assert sol2.value(key) == pytest.approx(sol1.value(key), abs=1e-6)
    d1 = extract_dlmp(sol1, base)
    d2 = extract_dlmp(sol2, scaled)
    assert d2.at(2, 0) == pytest.approx(k * d1.at(2, 0), rel=1e-6)


def test_problem_dump_for_external_cross_check(pre_run):
    text = pre_run.assembled.problem.dump()
    assert text.startswith("# conic problem:")
    for section in ("VARS", "MIN", "EQ", "INEQ", "SOC"):
        assert section in text


def test_duality_gap_small_on_bundled(pre_run):
    assert pre_run.solution.stats.duality_gap is not None
    assert pre_run.solution.stats.duality_gap <= 1e-6
