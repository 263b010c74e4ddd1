"""Command-line entry point.

Subcommands: bench, tables, guarantee, simulate, replay, serve. All
output is deterministic for fixed inputs and seed. Exit codes: 0 ok,
1 usage or bad input file, 2 solver failure, 3 protocol error.
"""

from __future__ import annotations

import json
import sys
from typing import Optional

import click
import numpy as np

from . import catalog as _catalog
from .benchmarks import equal_split, equipartition, max_min, min_max
from .errors import MannadivError, ProtocolError
from .guarantees import BNC, MK, equalize
from .model import (
    COMMODITY,
    KnifePath,
    Partition,
    Problem,
    Share,
    load_problem,
)
from .protocols import (
    DNC,
    ProtocolTranscript,
    RandomStrategy,
    ScriptedStrategy,
    TruthfulClockStrategy,
    TruthfulDncStrategy,
    replay as replay_transcript,
    run_clock,
    run_dnc,
)

BUILTIN_PROBLEMS = {
    "intro": _catalog.intro_problem,
    "degenerate": _catalog.degenerate_problem,
    "opening": _catalog.opening_problem,
}


def _load(problem: str) -> Problem:
    if problem in BUILTIN_PROBLEMS:
        return BUILTIN_PROBLEMS[problem]()
    try:
        return load_problem(problem)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise click.ClickException(f"cannot load problem {problem!r}: {e}") from e


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


@click.group()
def cli():
    """Worst-case welfare benchmarks and division protocols."""


@cli.command()
@click.option("--problem", required=True, help="problem file, or intro|degenerate|opening")
@click.option("--n", type=int, default=None, help="number of agents (default: as in the file)")
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["pretty", "json", "csv"]), default="pretty")
@click.option("--out", default=None, help="write output to a file")
def bench(problem, n, tol, fmt, out):
    """Per-agent minMax, Maxmin, equal split, and equipartition value."""
    prob = _load(problem)
    n = n or prob.n
    rows = []
    for name, u in prob.agents:
        mm = min_max(u, n, prob.manna, tol=tol)
        mx = max_min(u, n, prob.manna, tol=tol)
        row = {
            "agent": name,
            "min_max": mm.value,
            "max_min": mx.value,
            "method": mm.method,
        }
        if prob.manna.kind == COMMODITY:
            row["equal_split"] = equal_split(u, n, prob.manna)
        eq = equipartition(u, prob.path, n, tol=max(tol, 1e-6))
        row["equipartition"] = eq.common_value
        rows.append(row)
    if fmt == "json":
        _emit(_json({"v": 1, "n": n, "rows": rows}), out)
    elif fmt == "csv":
        keys = ["agent", "min_max", "max_min", "equal_split", "equipartition"]
        lines = [",".join(keys)]
        for r in rows:
            lines.append(",".join(str(r.get(k, "")) for k in keys))
        _emit("\n".join(lines) + "\n", out)
    else:
        lines = [f"n={n}"]
        for r in rows:
            es = f"  equal_split={r['equal_split']:.6f}" if "equal_split" in r else ""
            lines.append(
                f"{r['agent']}: minMax={r['min_max']:.6f}  Maxmin={r['max_min']:.6f}"
                f"{es}  equipartition={r['equipartition']:.6f}"
            )
        _emit("\n".join(lines) + "\n", out)


@cli.command()
@click.option("--which", type=click.Choice(["two_agent", "three_agent"]), required=True)
@click.option("--precision", type=click.Choice(["rounded", "full"]), default="rounded")
@click.option("--format", "fmt", type=click.Choice(["pretty", "json", "csv"]), default="pretty")
@click.option("--out", default=None)
def tables(which, precision, fmt, out):
    """The four benchmark columns over the six catalog utilities."""
    n = 2 if which == "two_agent" else 3
    rows = _catalog.compute_table(n)
    if fmt == "json":
        _emit(_json({"v": 1, "n": n, "rows": [r.to_json() for r in rows]}), out)
    elif fmt == "csv":
        lines = ["utility,min_max,gamma_p,equal_split,max_min"]
        for r in rows:
            vals = (
                r.rounded()
                if precision == "rounded"
                else (r.min_max, r.gamma_p, r.equal_split, r.max_min)
            )
            lines.append(",".join([r.label] + [str(v) for v in vals]))
        _emit("\n".join(lines) + "\n", out)
    else:
        _emit(_catalog.format_table(rows, n, precision), out)


@cli.command()
@click.option("--problem", required=True)
@click.option("--rule", type=click.Choice([MK, BNC]), required=True)
@click.option("--n", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--format", "fmt", type=click.Choice(["pretty", "json"]), default="pretty")
@click.option("--out", default=None)
def guarantee(problem, rule, n, tol, fmt, out):
    """Per-agent clock guarantee: equalized schedule and value."""
    prob = _load(problem)
    n = n or prob.n
    reports = []
    for name, u in prob.agents:
        rep = equalize(
            u, rule, n, manna=prob.manna, path=prob.path, theta=prob.theta, tol=tol
        )
        reports.append((name, rep))
    if fmt == "json":
        _emit(
            _json({"v": 1, "rule": rule, "n": n,
                   "reports": {name: rep.to_json() for name, rep in reports}}),
            out,
        )
    else:
        lines = [f"rule={rule} n={n}"]
        for name, rep in reports:
            sched = ", ".join(f"{t:.6f}" for t in rep.schedule.times[1:-1])
            lines.append(
                f"{name}: Gamma={rep.value:.6f}  schedule=({sched})  residual={rep.residual:.2e}"
            )
        _emit("\n".join(lines) + "\n", out)


def _parse_scripted(path: str):
    with open(path) as fh:
        raw = json.load(fh)

    def decode(a):
        if isinstance(a, (int, float)):
            return float(a)
        if isinstance(a, dict):
            return Share.from_json(a)
        if isinstance(a, list) and a and isinstance(a[0], dict):
            return Partition.from_json(a)
        return [int(i) for i in a]

    return [decode(a) for a in raw]


def _make_strategies(prob, rule, specs, seed, maxmin_opening):
    n = prob.n
    strategies = []
    reports = {}
    for i, ((name, u), spec) in enumerate(zip(prob.agents, specs)):
        if spec == "truthful":
            if rule == DNC:
                strategies.append(
                    TruthfulDncStrategy(u, n, prob.manna, maxmin_opening=maxmin_opening)
                )
            else:
                key = u.to_json() if u.segment_fn is None else id(u)
                key = json.dumps(key, sort_keys=True)
                if key not in reports:
                    reports[key] = equalize(
                        u, rule, n, manna=prob.manna, path=prob.path, theta=prob.theta
                    )
                strategies.append(TruthfulClockStrategy(u, reports[key], prob.theta))
        elif spec == "random":
            strategies.append(RandomStrategy(seed + i, prob.theta))
        elif spec.startswith("scripted:"):
            strategies.append(ScriptedStrategy(_parse_scripted(spec.split(":", 1)[1])))
        else:
            raise click.ClickException(f"unknown strategy {spec!r}")
    return strategies


@cli.command()
@click.option("--problem", required=True)
@click.option("--rule", type=click.Choice([DNC, MK, BNC]), default=DNC, show_default=True)
@click.option("--strategies", default=None,
              help="comma list per agent: truthful|random|scripted:FILE (default all truthful)")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--ordering", default=None, help="comma list of agent indices (dnc divider order)")
@click.option("--direction", type=click.Choice(["increasing", "decreasing"]), default="increasing")
@click.option("--maxmin-opening", is_flag=True,
              help="truthful dividers open with their Maxmin witness partition")
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--out", default=None, help="write the transcript JSON to a file")
def simulate(problem, rule, strategies, seed, ordering, direction, maxmin_opening, tol, out):
    """Run one protocol and audit realized utilities against guarantees."""
    prob = _load(problem)
    specs = strategies.split(",") if strategies else ["truthful"] * prob.n
    if len(specs) != prob.n:
        raise click.ClickException(f"need {prob.n} strategies, got {len(specs)}")
    strat = _make_strategies(prob, rule, specs, seed, maxmin_opening)
    if rule == DNC:
        order = [int(i) for i in ordering.split(",")] if ordering else None
        transcript = run_dnc(prob, strat, ordering=order)
        thresholds = [min_max(u, prob.n, prob.manna, tol=tol).value for _, u in prob.agents]
        threshold_name = "minMax"
    else:
        transcript = run_clock(prob, strat, rule=rule, direction=direction)
        thresholds = []
        for _, u in prob.agents:
            try:
                rep = equalize(
                    u, rule, prob.n, manna=prob.manna, path=prob.path, theta=prob.theta
                )
                thresholds.append(rep.value)
            except MannadivError:
                thresholds.append(None)
        threshold_name = "Gamma"
    lines = [f"rule={rule} n={prob.n}"]
    for name, realized, thr in zip(prob.names(), transcript.utilities, thresholds):
        mark = ""
        if thr is not None:
            mark = "  ok" if realized >= thr - 10 * tol else "  BELOW"
            lines.append(
                f"{name}: utility={realized:.6f}  {threshold_name}={thr:.6f}{mark}"
            )
        else:
            lines.append(f"{name}: utility={realized:.6f}")
    click.echo("\n".join(lines))
    if out:
        with open(out, "w") as fh:
            fh.write(transcript.dumps() + "\n")


@cli.command()
@click.option("--transcript", "transcript_path", required=True)
@click.option("--out", default=None, help="write the replayed transcript to a file")
def replay(transcript_path, out):
    """Re-run a saved transcript and verify the identical allocation."""
    try:
        with open(transcript_path) as fh:
            transcript = ProtocolTranscript.loads(fh.read())
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise click.ClickException(f"cannot load transcript: {e}") from e
    rerun = replay_transcript(transcript)
    identical = rerun.dumps() == transcript.dumps()
    click.echo(f"replay: {'identical' if identical else 'MISMATCH'}")
    for name, val in zip([a["name"] for a in transcript.problem["agents"]], rerun.utilities):
        click.echo(f"{name}: utility={val:.6f}")
    if out:
        with open(out, "w") as fh:
            fh.write(rerun.dumps() + "\n")
    if not identical:
        raise ProtocolError("replayed allocation differs from the transcript")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP session service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except ProtocolError as e:
        click.echo(f"protocol error: {e}", err=True)
        return 3
    except MannadivError as e:
        click.echo(f"solver error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
