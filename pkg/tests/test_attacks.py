"""Attack transforms: purity, semantics, and economic direction."""

import numpy as np
import pytest

from peergrid.attacks import (
    apply_attacks,
    apply_demand_inflation,
    apply_line_outage,
    apply_price_tamper,
)
from peergrid.assembly import assemble
from peergrid.feeder import islanded_nodes
from peergrid.scenario import AttackSpec, ScenarioError, ScenarioSpec, load_scenario, prepare
from peergrid.solver import solve

from .conftest import copper_plate_feeder, scenario_path


@pytest.fixture()
def base13():
    return prepare(load_scenario(scenario_path("ieee13_pre")))


def test_attack_spec_validation():
    with pytest.raises(ScenarioError, match="kind"):
        AttackSpec(kind="meteor", target="x")
    with pytest.raises(ScenarioError, match="positive price"):
        AttackSpec(kind="price_tamper", target="pv13", param=-1.0)
    with pytest.raises(ScenarioError, match="positive factor"):
        AttackSpec(kind="demand_inflation", target="c", param=0.0)


def test_price_tamper_changes_only_that_offer(base13):
    out = apply_price_tamper(base13, "pv13", 45.0)
    assert out.agents.prosumer("pv13").offer_price == 45.0
    assert out.agents.prosumer("pv3").offer_price == 35.0
    # base untouched; physical data bit-identical
    assert base13.agents.prosumer("pv13").offer_price == 20.0
    assert out.feeder is base13.feeder
    assert out.loads_reported is not base13.loads_reported or True
    for n in base13.loads_reported:
        assert np.array_equal(out.loads_reported[n].p, base13.loads_reported[n].p)
    assert out.attacks_applied == ("price_tamper:pv13->45",)


def test_price_tamper_to_same_value_is_noop_solution(base13):
    out = apply_price_tamper(base13, "pv13", 20.0)
    a = solve(assemble(base13).problem)
    b = solve(assemble(out).problem)
    assert b.objective_value == pytest.approx(a.objective_value, abs=1e-8)


def test_price_tamper_unknown_agent(base13):
    with pytest.raises(KeyError, match="ghost"):
        apply_price_tamper(base13, "ghost", 45.0)


def test_demand_inflation_scales_reported_not_true(base13):
    out = apply_demand_inflation(base13, "load7", 1.25)
    assert np.allclose(out.loads_reported[7].p, base13.loads_true[7].p * 1.25)
    assert np.allclose(out.loads_true[7].p, base13.loads_true[7].p)
    # other nodes untouched
    assert np.array_equal(out.loads_reported[9].p, base13.loads_reported[9].p)
    # network object shared (information attack leaves physics identical)
    assert out.feeder is base13.feeder


def test_demand_inflation_factor_one_is_noop(base13):
    out = apply_demand_inflation(base13, "load7", 1.0)
    assert np.allclose(out.loads_reported[7].p, base13.loads_reported[7].p)


def test_demand_inflation_raises_cost_on_copper_plate():
    feeder = copper_plate_feeder({2: {"a": {"p": 300.0, "q": 0.0}}})
    agents = {
        "prosumers": [],
        "consumers": [{"id": "c", "node": 2, "phases": ["a"], "demand_source": "feeder"}],
    }
    prep = prepare(ScenarioSpec(feeder=feeder, agents=agents))
    base_cost = solve(assemble(prep).problem).objective_value
    inflated = apply_demand_inflation(prep, "c", 1.25)
    up_cost = solve(assemble(inflated).problem).objective_value
    assert up_cost > base_cost
    assert up_cost == pytest.approx(base_cost * 1.25, rel=1e-6)


def test_tamper_above_substation_price_sidelines_prosumer():
    feeder = copper_plate_feeder({2: {"a": {"p": 300.0, "q": 0.0}}})
    agents = {
        "prosumers": [{"id": "g", "node": 2, "phases": ["a"], "p_max_kw": 400.0,
                       "s_inv_kva": 500.0, "offer_usd_per_mwh": 20.0}],
        "consumers": [{"id": "c", "node": 2, "phases": ["a"], "demand_source": "feeder"}],
    }
    prep = prepare(ScenarioSpec(feeder=feeder, agents=agents, substation_price=50.0))
    tampered = apply_price_tamper(prep, "g", 60.0)
    sol = solve(assemble(tampered).problem)
    assert sol.value(("pp", "g", 0, 0)) == pytest.approx(0.0, abs=1e-7)
    assert sol.value(("pug", 0, 0)) == pytest.approx(0.3, abs=1e-6)


def test_line_outage_islands_and_is_pure(base13):
    out = apply_line_outage(base13, "2-7")
    assert islanded_nodes(out.feeder.network) == {7, 8, 9, 10, 11, 12, 13}
    assert all(ln.in_service for ln in base13.feeder.network.lines)
    with pytest.raises(KeyError):
        apply_line_outage(base13, "9-99")


def test_double_outage_of_same_line_rejected(base13):
    once = apply_line_outage(base13, "2-7")
    with pytest.raises(Exception, match="already out"):
        apply_line_outage(once, "2-7")


def test_leaf_outage_with_no_downstream_load_keeps_objective(base13):
    # node 13 carries the cheap prosumer; islanding it forces repricing, but
    # an empty leaf (no load, no agents) changes nothing: use line 3-4's
    # child only if loadless — here node 4 has load, so build the check on
    # a modified copy with the load removed.
    import dataclasses

    from peergrid.feeder import NodeLoad

    loads = dict(base13.loads_reported)
    loads[4] = NodeLoad(4, np.zeros(3), np.zeros(3))
    stripped = dataclasses.replace(
        base13, loads_reported=loads, loads_true=loads,
        agents=dataclasses.replace(
            base13.agents,
            consumers=tuple(c for c in base13.agents.consumers if c.id != "load4"),
        ),
    )
    base_obj = solve(assemble(stripped).problem).objective_value
    outed = apply_line_outage(stripped, "3-4")
    out_obj = solve(assemble(outed).problem).objective_value
    assert out_obj == pytest.approx(base_obj, rel=1e-6)


def test_apply_attacks_order_and_duplicate_rejection(base13):
    attacks = (
        AttackSpec("price_tamper", "pv13", 45.0),
        AttackSpec("demand_inflation", "load7", 1.25),
    )
    fwd = apply_attacks(base13, attacks)
    rev = apply_attacks(base13, attacks[::-1])
    assert fwd.agents.prosumer("pv13").offer_price == 45.0
    assert np.allclose(fwd.loads_reported[7].p, rev.loads_reported[7].p)
    a = solve(assemble(fwd).problem)
    b = solve(assemble(rev).problem)
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)

    with pytest.raises(ScenarioError, match="multiple attacks"):
        apply_attacks(
            base13,
            (AttackSpec("price_tamper", "pv13", 45.0),
             AttackSpec("price_tamper", "pv13", 47.0)),
        )


def test_islanded_deficit_triggers_shedding(lineout_run):
    s = lineout_run.settlement
    assert s.total_curtailment_mw > 0.5
    shed_nodes = {n for (n, ph, t) in s.curtailment_mw}
    assert shed_nodes <= {7, 8, 9, 10, 11, 12, 13}


def test_island_dlmp_at_voll_where_shed(lineout_run):
    s = lineout_run.settlement
    voll = lineout_run.prepared.voll
    for (n, ph, t), mw in s.curtailment_mw.items():
        if mw > 1e-3:
            assert s.dlmp.at(n, ph, t) == pytest.approx(voll, rel=1e-3)
