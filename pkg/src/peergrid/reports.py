"""Report payloads and deterministic file emission.

A run serializes to one JSON payload (the service response body and the
``report.json`` on disk are the same object) plus four long-format CSV
tables: ``bills.csv``, ``dlmp.csv``, ``voltage.csv``, ``trades.csv``.
CSV bodies are byte-reproducible for identical inputs: rows are sorted,
floats use repr-shortest formatting, and timestamps live only in the JSON
``meta`` block.
"""

from __future__ import annotations

import datetime
import json
from pathlib import Path

from .feeder import PHASES
from .runner import CompareResult, RunResult

_SCHEMA = "peergrid-report/1"


def _f(x: float) -> str:
    return repr(float(x))


def payload_from_result(result: RunResult, include_meta: bool = True) -> dict:
    """JSON-ready payload for one solved (or failed) scenario."""
    out: dict = {
        "schema": _SCHEMA,
        "scenario": result.prepared.name,
        "status": result.solution.status,
        "exit_code": result.exit_code,
        "attacks_applied": list(result.prepared.attacks_applied),
        "solver": {
            "name": result.solution.stats.solver if result.solution.stats else None,
            "iterations": result.solution.stats.iterations if result.solution.stats else None,
            "duality_gap": result.solution.stats.duality_gap if result.solution.stats else None,
        },
        "infeasibility_hint": list(result.solution.infeasibility_hint),
    }
    if include_meta:
        out["meta"] = {
            "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "wall_time_s": result.wall_time_s,
        }
    if result.problem_dump is not None:
        out["problem_dump"] = result.problem_dump

    s = result.settlement
    if s is None:
        return out

    lo, hi = s.dlmp.range()
    out.update(
        {
            "objective_usd": s.objective_usd,
            "totals": {
                "market_cost_usd": s.market_cost_usd,
                "grid_cost_usd": s.grid_cost_usd,
                "total_cost_usd": s.total_cost_usd,
                "substation_payment_usd": s.substation_payment_usd,
                "surplus_usd": s.surplus_usd,
                "losses_mw": s.losses_mw,
                "total_curtailment_mw": s.total_curtailment_mw,
            },
            "dlmp_range_usd_per_mwh": [lo, hi],
            "soc_gap": {
                "max": s.soc_gap.max_gap,
                "mean": s.soc_gap.mean_gap,
                "flagged": [list(k) for k in s.soc_gap.flagged],
                "threshold": s.soc_gap.threshold,
            },
            "bills": [
                {
                    "agent": b.agent_id,
                    "node": b.node,
                    "energy_mwh": b.energy_mwh,
                    "amount_usd": b.amount_usd,
                }
                for b in s.bills
            ],
            "revenues": [
                {
                    "agent": r.agent_id,
                    "node": r.node,
                    "energy_mwh": r.energy_mwh,
                    "amount_usd": r.amount_usd,
                }
                for r in s.revenues
            ],
            "dlmp": [
                {"node": n, "phase": PHASES[ph], "t": t, "usd_per_mwh": price}
                for n, ph, t, price in s.dlmp.rows()
            ],
            "voltage": [
                {"node": n, "phase": PHASES[ph], "t": t, "vm_pu": v}
                for (n, ph, t), v in sorted(s.voltage_pu.items())
            ],
            "curtailment": [
                {"node": n, "phase": PHASES[ph], "t": t, "mw": mw}
                for (n, ph, t), mw in sorted(s.curtailment_mw.items())
            ],
            "substation_import": [
                {"phase": PHASES[ph], "t": t, "mw": mw}
                for (ph, t), mw in sorted(s.substation_import_mw.items())
            ],
            "trades": [
                {"seller": sl, "buyer": by, "phase": PHASES[ph], "t": t, "kw": kw}
                for (sl, by, ph, t), kw in sorted(s.trades_kw.items())
            ],
            "reported_vs_true_mw": {
                str(n): {"reported": rep, "true": tru}
                for n, (rep, tru) in sorted(s.reported_vs_true_mw.items())
            },
            "advisories": list(s.advisories),
        }
    )
    return out


def payload_from_compare(result: CompareResult, include_meta: bool = True) -> dict:
    out = {
        "schema": _SCHEMA + "+compare",
        "pre": payload_from_result(result.pre, include_meta=include_meta),
        "post": payload_from_result(result.post, include_meta=include_meta),
        "exit_code": result.exit_code,
    }
    d = result.delta
    if d is not None:
        out["delta"] = {
            "bill_delta_usd": dict(sorted(d.bill_delta_usd.items())),
            "revenue_delta_usd": dict(sorted(d.revenue_delta_usd.items())),
            "total_cost_delta_usd": d.total_cost_delta_usd,
            "total_cost_ratio": d.total_cost_ratio,
            "curtailment_delta_mw": d.curtailment_delta_mw,
            "dlmp_delta": [
                {"node": n, "phase": PHASES[ph], "t": t, "usd_per_mwh": v}
                for (n, ph, t), v in sorted(d.dlmp_delta.items())
            ],
            "voltage_delta": [
                {"node": n, "phase": PHASES[ph], "t": t, "vm_pu": v}
                for (n, ph, t), v in sorted(d.voltage_delta_pu.items())
            ],
        }
    return out


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_f(c) if isinstance(c, float) else str(c) for c in row))
    path.write_text("\n".join(lines) + "\n")


def write_report_files(payload: dict, out_dir: str | Path) -> list[Path]:
    """Write report.json plus the four CSV tables; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json"]
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    if "bills" in payload:
        _write_csv(
            out / "bills.csv",
            ["agent", "kind", "node", "energy_mwh", "amount_usd"],
            [
                [b["agent"], "consumer", b["node"], float(b["energy_mwh"]), float(b["amount_usd"])]
                for b in payload["bills"]
            ]
            + [
                [r["agent"], "prosumer", r["node"], float(r["energy_mwh"]), float(r["amount_usd"])]
                for r in payload["revenues"]
            ],
        )
        _write_csv(
            out / "dlmp.csv",
            ["node", "phase", "t", "usd_per_mwh"],
            [[d["node"], d["phase"], d["t"], float(d["usd_per_mwh"])] for d in payload["dlmp"]],
        )
        _write_csv(
            out / "voltage.csv",
            ["node", "phase", "t", "vm_pu"],
            [[v["node"], v["phase"], v["t"], float(v["vm_pu"])] for v in payload["voltage"]],
        )
        _write_csv(
            out / "trades.csv",
            ["seller", "buyer", "phase", "t", "kw"],
            [
                [tr["seller"], tr["buyer"], tr["phase"], tr["t"], float(tr["kw"])]
                for tr in payload["trades"]
            ],
        )
        written += [out / "bills.csv", out / "dlmp.csv", out / "voltage.csv", out / "trades.csv"]

    if "problem_dump" in payload:
        (out / "problem.txt").write_text(payload["problem_dump"])
        written.append(out / "problem.txt")
    return written


def write_compare_files(payload: dict, out_dir: str | Path) -> list[Path]:
    """Emit pre/ and post/ report trees plus the delta tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    written += write_report_files(payload["pre"], out / "pre")
    written += write_report_files(payload["post"], out / "post")
    (out / "compare.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(out / "compare.json")
    if "delta" in payload:
        d = payload["delta"]
        _write_csv(
            out / "deltas.csv",
            ["quantity", "key", "value"],
            [["bill_usd", k, float(v)] for k, v in d["bill_delta_usd"].items()]
            + [["revenue_usd", k, float(v)] for k, v in d["revenue_delta_usd"].items()]
            + [
                [
                    "dlmp_usd_per_mwh",
                    f"{row['node']}.{row['phase']}.t{row['t']}",
                    float(row["usd_per_mwh"]),
                ]
                for row in d["dlmp_delta"]
            ]
            + [["total_cost_usd", "all", float(d["total_cost_delta_usd"])]]
            + [["curtailment_mw", "all", float(d["curtailment_delta_mw"])]],
        )
        written.append(out / "deltas.csv")
    return written
