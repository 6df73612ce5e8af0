"""Command-line front end.

The CLI is a thin client over the same orchestration the HTTP service uses:
locally it calls the runner in-process; with ``--server`` it posts the
scenario (feeder and agents inlined) to a running service and writes the
returned payload. Either way the report files are identical.

Exit codes: 0 optimal, 2 infeasible, 3 numerical failure / unbounded,
1 for input errors (bad files, unknown targets).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import httpx

from .agents import AgentError
from .feeder import FeederError
from .reports import (
    payload_from_compare,
    payload_from_result,
    write_compare_files,
    write_report_files,
)
from .runner import RunConfig, run_compare, run_spec
from .scenario import ScenarioError, load_scenario

DEFAULT_OUT_ENV = "PEERGRID_OUT"
_INPUT_ERRORS = (FeederError, AgentError, ScenarioError, KeyError)


def _config(tol, no_shedding, diag_loss, dump_problem) -> RunConfig:
    return RunConfig(
        tol=tol,
        shedding=not no_shedding,
        diag_loss=diag_loss,
        dump_problem=dump_problem,
    )


def _out_dir(out) -> Path:
    if out is not None:
        return Path(out)
    return Path(os.environ.get(DEFAULT_OUT_ENV, "peergrid-out"))


def _inline_scenario(path: Path) -> dict:
    """Scenario file with feeder/agents content embedded, for --server mode."""
    spec = load_scenario(path)
    base = spec.base_dir or Path(".")

    def _load(ref):
        if isinstance(ref, dict):
            return ref
        p = Path(ref)
        if not p.is_absolute():
            p = base / p
        return json.loads(p.read_text())

    return {
        "name": spec.name,
        "feeder": _load(spec.feeder),
        "agents": _load(spec.agents),
        "horizon": spec.horizon,
        "voll_usd_per_mwh": spec.voll,
        "substation_usd_per_mwh": spec.substation_price,
        "attacks": [
            {"kind": a.kind, "target": a.target, "param": a.param} for a in spec.attacks
        ],
    }


def _post(server: str, route: str, body: dict) -> dict:
    resp = httpx.post(server.rstrip("/") + route, json=body, timeout=120.0)
    if resp.status_code != 200:
        raise click.ClickException(f"server returned {resp.status_code}: {resp.text}")
    return resp.json()


def _print_summary(payload: dict) -> None:
    click.echo(f"scenario : {payload.get('scenario')}")
    click.echo(f"status   : {payload.get('status')}")
    if payload.get("status") != "optimal":
        for hint in payload.get("infeasibility_hint", []):
            click.echo(f"  hint: {hint}")
        return
    lo, hi = payload["dlmp_range_usd_per_mwh"]
    totals = payload["totals"]
    click.echo(f"objective: ${payload['objective_usd']:.2f}")
    click.echo(f"dlmp     : [{lo:.2f}, {hi:.2f}] $/MWh")
    click.echo(f"soc gap  : max {payload['soc_gap']['max']:.3e}")
    if totals["total_curtailment_mw"] > 1e-9:
        click.echo(f"curtailed: {totals['total_curtailment_mw']:.3f} MW")


@click.group()
def main():
    """Co-optimized P2P trading and unbalanced network flow simulator."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help=f"output dir (or ${DEFAULT_OUT_ENV})")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--no-shedding", is_flag=True, help="disable load curtailment variables")
@click.option("--diag-loss", is_flag=True, help="diagonal-only impedance loss terms")
@click.option("--dump-problem", is_flag=True, help="also write the conic program text dump")
@click.option("--server", default=None, help="route the solve through a running service")
def solve(scenario_path, out, tol, no_shedding, diag_loss, dump_problem, server):
    """Solve one scenario and write report.json plus CSV tables."""
    out_dir = _out_dir(out)
    try:
        if server:
            body = {
                "scenario": _inline_scenario(Path(scenario_path)),
                "options": {
                    "tol": tol,
                    "shedding": not no_shedding,
                    "diag_loss": diag_loss,
                    "dump_problem": dump_problem,
                },
            }
            payload = _post(server, "/solve", body)
        else:
            spec = load_scenario(scenario_path)
            result = run_spec(spec, _config(tol, no_shedding, diag_loss, dump_problem))
            payload = payload_from_result(result)
    except _INPUT_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc

    write_report_files(payload, out_dir)
    _print_summary(payload)
    click.echo(f"reports  : {out_dir}/")
    sys.exit(payload["exit_code"])


@main.command("attack-compare")
@click.option("--pre", "pre_path", required=True, type=click.Path(exists=True))
@click.option("--post", "post_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--no-shedding", is_flag=True)
@click.option("--diag-loss", is_flag=True)
@click.option("--dump-problem", is_flag=True)
@click.option("--server", default=None)
def attack_compare(pre_path, post_path, out, tol, no_shedding, diag_loss, dump_problem, server):
    """Solve a pre/post scenario pair and write the delta report."""
    out_dir = _out_dir(out)
    try:
        if server:
            body = {
                "pre": _inline_scenario(Path(pre_path)),
                "post": _inline_scenario(Path(post_path)),
                "options": {
                    "tol": tol,
                    "shedding": not no_shedding,
                    "diag_loss": diag_loss,
                    "dump_problem": dump_problem,
                },
            }
            payload = _post(server, "/compare", body)
        else:
            result = run_compare(
                load_scenario(pre_path),
                load_scenario(post_path),
                _config(tol, no_shedding, diag_loss, dump_problem),
            )
            payload = payload_from_compare(result)
    except _INPUT_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    except ValueError as exc:  # mismatched agent sets from compare()
        raise click.ClickException(str(exc)) from exc

    write_compare_files(payload, out_dir)
    click.echo("--- pre ---")
    _print_summary(payload["pre"])
    click.echo("--- post ---")
    _print_summary(payload["post"])
    if "delta" in payload:
        d = payload["delta"]
        click.echo("--- delta ---")
        click.echo(f"total cost: {d['total_cost_delta_usd']:+.2f} USD "
                   f"(x{d['total_cost_ratio']:.3f})")
        click.echo(f"curtailment: {d['curtailment_delta_mw']:+.3f} MW")
    click.echo(f"reports  : {out_dir}/")
    sys.exit(payload["exit_code"])


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("peergrid.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
