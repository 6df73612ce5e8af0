"""Billing, accounting identities, and pre/post comparison."""

import pytest

from peergrid.assembly import assemble, extract_dlmp
from peergrid.scenario import ScenarioSpec, prepare
from peergrid.settlement import compare, compute_settlement
from peergrid.solver import solve

from .conftest import copper_plate_feeder


def _settle(feeder, agents, **kw):
    prep = prepare(ScenarioSpec(feeder=feeder, agents=agents, **kw))
    sol = solve(assemble(prep).problem)
    assert sol.status == "optimal"
    dlmp = extract_dlmp(sol, prep)
    return prep, sol, compute_settlement(sol, dlmp, prep)


def test_copper_plate_bill_is_price_times_demand():
    feeder = copper_plate_feeder({2: {"a": {"p": 300.0, "q": 0.0}}})
    agents = {
        "prosumers": [{"id": "g", "node": 2, "phases": ["a"], "p_max_kw": 600.0,
                       "s_inv_kva": 700.0, "offer_usd_per_mwh": 25.0}],
        "consumers": [{"id": "c", "node": 2, "phases": ["a"], "demand_source": "feeder"}],
    }
    prep, sol, report = _settle(feeder, agents)
    # uniform DLMP = offer price; demand 0.3 pu over one hour = 0.3 MWh
    assert report.bill_of("c") == pytest.approx(25.0 * 0.3, rel=1e-6)
    assert report.revenue_of("g") == pytest.approx(25.0 * 0.3, rel=1e-6)


def test_currency_conservation_lossless():
    feeder = copper_plate_feeder(
        {2: {"a": {"p": 300.0, "q": 0.0}}, 3: {"a": {"p": 200.0, "q": 0.0}}},
        n_nodes=3,
    )
    agents = {
        "prosumers": [{"id": "g", "node": 2, "phases": ["a"], "p_max_kw": 350.0,
                       "s_inv_kva": 400.0, "offer_usd_per_mwh": 25.0}],
        "consumers": [
            {"id": "c2", "node": 2, "phases": ["a"], "demand_source": "feeder"},
            {"id": "c3", "node": 3, "phases": ["a"], "demand_source": "feeder"},
        ],
    }
    prep, sol, report = _settle(feeder, agents)
    # no congestion and no losses: the books net out exactly
    assert report.surplus_usd == pytest.approx(0.0, abs=1e-8)


def test_accounting_identity_on_bundled(pre_run):
    s = pre_run.settlement
    total_bills = sum(b.amount_usd for b in s.bills)
    total_rev = sum(r.amount_usd for r in s.revenues)
    assert total_bills == pytest.approx(
        total_rev + s.substation_payment_usd + s.surplus_usd, abs=1e-9
    )
    # objective splits into the market and grid parts exactly
    assert s.total_cost_usd == pytest.approx(s.objective_usd, abs=1e-6)


def test_report_completeness(pre_run):
    s = pre_run.settlement
    agents = pre_run.prepared.agents
    assert {b.agent_id for b in s.bills} == {c.id for c in agents.consumers}
    assert {r.agent_id for r in s.revenues} == {p.id for p in agents.prosumers}
    assert len(s.bills) == len(agents.consumers)
    assert len(s.revenues) == len(agents.prosumers)


def test_settlement_requires_optimal(lineout_run):
    from peergrid.solver import Solution

    bad = Solution(status="infeasible", objective_value=None)
    with pytest.raises(ValueError, match="non-optimal"):
        compute_settlement(bad, lineout_run.settlement.dlmp, lineout_run.prepared)


def test_compare_identical_runs_zero_deltas(pre_run):
    delta = compare(pre_run.settlement, pre_run.settlement)
    assert all(abs(v) == 0.0 for v in delta.bill_delta_usd.values())
    assert all(abs(v) == 0.0 for v in delta.revenue_delta_usd.values())
    assert delta.total_cost_delta_usd == 0.0
    assert delta.curtailment_delta_mw == 0.0
    assert delta.total_cost_ratio == pytest.approx(1.0)


def test_compare_direction_under_coordinated_attack(pre_run, coord_run):
    delta = compare(pre_run.settlement, coord_run.settlement)
    # adverse prosumer gains; every consumer pays more
    assert delta.revenue_delta_usd["pv13"] > 0.0
    assert all(v > 0.0 for v in delta.bill_delta_usd.values())
    assert delta.total_cost_delta_usd > 0.0


def test_compare_curtailment_delta(pre_run, lineout_run):
    delta = compare(pre_run.settlement, lineout_run.settlement)
    assert delta.curtailment_delta_mw == pytest.approx(
        lineout_run.settlement.total_curtailment_mw, abs=1e-9
    )


def test_compare_rejects_mismatched_agents(pre_run):
    feeder = copper_plate_feeder({2: {"a": {"p": 100.0, "q": 0.0}}})
    agents = {
        "prosumers": [],
        "consumers": [{"id": "other", "node": 2, "phases": ["a"], "demand_source": "feeder"}],
    }
    prep, sol, report = _settle(feeder, agents)
    with pytest.raises(ValueError, match="mismatched agent sets"):
        compare(pre_run.settlement, report)


def test_reported_vs_true_logged_for_inflation(coord_run):
    table = coord_run.settlement.reported_vs_true_mw
    assert set(table) == {7}
    reported, true = table[7]
    assert reported == pytest.approx(true * 1.25, rel=1e-9)


def test_voltage_profile_present_for_energized_pairs(pre_run):
    s = pre_run.settlement
    assert (4, 1, 0) in s.voltage_pu
    assert (11, 2, 0) in s.voltage_pu
    assert (12, 0, 0) in s.voltage_pu
    assert all(0.8 < v < 1.2 for v in s.voltage_pu.values())
