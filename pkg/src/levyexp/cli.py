"""Command-line front end.

Exit codes: 0 success, 1 verification failure (or golden mismatch), 2 input or
schema error, 3 runtime or limit error.  The default worker count comes from
``LEVYEXP_WORKERS``.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .errors import (EnumerationOverflow, HorizonExceeded, InvalidTriplet, LevyExpError,
                     ParameterError, PreconditionViolation, QuadratureFailure, SchemaError,
                     UnsupportedCombination)
from . import scenario as S
from .verify import EmpiricalReport, summary_table

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3

_INPUT_ERRORS = (SchemaError, InvalidTriplet, ParameterError, PreconditionViolation)
_RUNTIME_ERRORS = (HorizonExceeded, EnumerationOverflow, QuadratureFailure, UnsupportedCombination)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _INPUT_ERRORS as e:
            click.echo(f"input error: {e}", err=True)
            sys.exit(EXIT_INPUT)
        except _RUNTIME_ERRORS as e:
            click.echo(f"runtime error ({type(e).__name__}): {e}", err=True)
            sys.exit(EXIT_RUNTIME)
        except LevyExpError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_RUNTIME)
    return wrapper


def _params_overrides(text: str | None) -> dict:
    if not text:
        return {}
    raw = Path(text[1:]).read_text() if text.startswith("@") else text
    try:
        d = json.loads(raw)
    except json.JSONDecodeError as e:
        raise SchemaError(f"--params is not valid JSON: {e}", path="/params") from None
    if not isinstance(d, dict):
        raise SchemaError("--params must be a JSON object", path="/params")
    return d


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part[1:]:
                a, b = part.split("-", 1)
                seeds += list(range(int(a), int(b) + 1))
            elif part:
                seeds.append(int(part))
    except ValueError:
        raise SchemaError(f"bad seed list {text!r}", path="/seeds") from None
    if not seeds:
        raise SchemaError("empty seed list", path="/seeds")
    return seeds


def _select(scenarios, ids):
    if not ids:
        return scenarios
    known = {s.id: s for s in scenarios}
    missing = [i for i in ids if i not in known]
    if missing:
        raise SchemaError(f"unknown scenario ids {missing}", path="/id")
    return [known[i] for i in ids]


def _load(path: str | None):
    if path is None:
        return S.load_golden()
    return S.load_scenarios(path)


scenario_opt = click.option("--scenario", "scenario_file", type=click.Path(exists=True, dir_okay=False),
                            help="Scenario JSON file (default: the bundled golden table).")
id_opt = click.option("--id", "ids", multiple=True, help="Restrict to these scenario ids.")
format_opt = click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table",
                          show_default=True)
params_opt = click.option("--params", "params_text", default=None,
                          help="JSON object (or @file) overriding simulation parameters.")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Support and continuity of killed exponential functionals of Levy processes."""


@main.command("classify")
@scenario_opt
@id_opt
@format_opt
@_guarded
def cmd_classify(scenario_file, ids, fmt):
    """Symbolic verdicts; rows with an ``expected`` block are checked against it."""
    scenarios = _select(_load(scenario_file), ids)
    rows, mismatched = [], 0
    for sc in scenarios:
        cl = S.classify_scenario(sc)
        row = cl.to_dict()
        if sc.expected:
            problems = S.compare_expected(sc, cl)
            row["match"] = not problems
            row["problems"] = problems
            mismatched += bool(problems)
        rows.append(row)
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2))
    else:
        click.echo(_classify_table(rows))
    sys.exit(EXIT_FAIL if mismatched else EXIT_OK)


def _classify_table(rows) -> str:
    out = [("scenario", "support", "atom0", "cont", "ac", "clause", "match")]
    for r in rows:
        sup = r["support"]
        shape = "-" if sup is None else sup["shape"]
        law = r["law"]
        clause = law["trail"][-1]["clause"] if law["trail"] else "-"
        if sup is not None and sup["trail"]:
            clause = sup["trail"][-1]["clause"] + "; " + clause
        match = "" if "match" not in r else ("ok" if r["match"] else "MISMATCH")
        out.append((r["scenario_id"], shape, law["atom_at_zero"], law["continuous"],
                    law["absolutely_continuous"], clause, match))
    widths = [max(len(row[i]) for row in out) for i in range(len(out[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in out)


@main.command("simulate")
@scenario_opt
@id_opt
@click.option("--n", "n", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="CSV file (one scenario) or directory (several); default stdout.")
@params_opt
@_guarded
def cmd_simulate(scenario_file, ids, n, seed, out, params_text):
    """Draw ``n`` samples per scenario and write CSV."""
    if n < 1:
        raise ParameterError("--n must be >= 1")
    scenarios = _select(_load(scenario_file), ids)
    overrides = _params_overrides(params_text)
    for sc in scenarios:
        batch = S.simulate_scenario(sc, n, seed, sc.sim_params(overrides))
        text = S.batch_to_csv(batch)
        if out is None:
            click.echo(text, nl=False)
        elif len(scenarios) == 1 and not Path(out).is_dir():
            Path(out).write_text(text)
        else:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / f"{sc.id}_seed{seed}.csv").write_text(text)
    sys.exit(EXIT_OK)


@main.command("verify")
@scenario_opt
@id_opt
@click.option("--n", "n", type=int, default=10_000, show_default=True)
@click.option("--seeds", default="1-10", show_default=True, help="Comma list or ranges, e.g. 1-10.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Directory for report JSON.")
@params_opt
@format_opt
@_guarded
def cmd_verify(scenario_file, ids, n, seeds, out, params_text, fmt):
    """Classify, simulate and run the statistical tests; exit 1 if any test fails."""
    if n < 1:
        raise ParameterError("--n must be >= 1")
    scenarios = _select(_load(scenario_file), ids)
    seed_list = _parse_seeds(seeds)
    overrides = _params_overrides(params_text)
    reports = []
    for sc in scenarios:
        try:
            rep = S.verify_scenario(sc, n, seed_list, sc.sim_params(overrides))
        except UnsupportedCombination as e:
            rep = {"scenario_id": sc.id, "skipped": str(e), "tests": [], "passed": True}
        reports.append(rep)
        if out:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / f"{sc.id}.json").write_text(json.dumps(rep, indent=2, sort_keys=True))
    if fmt == "json":
        click.echo(json.dumps([{k: r[k] for k in ("scenario_id", "tests", "passed")} for r in reports],
                              indent=2))
    else:
        click.echo(_report_table(reports))
    sys.exit(EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAIL)


def _report_table(reports) -> str:
    rows = []
    for r in reports:
        for t in r["tests"]:
            rows.append(EmpiricalReport(t["scenario_id"], t["test"], _f(t["statistic"]), _f(t["threshold"]),
                                        t["status"]))
    return summary_table(rows)


def _f(x) -> float:
    return float(x)  # non-finite values are stored as "inf"/"nan" strings


@main.command("report")
@click.argument("report_dir", type=click.Path(exists=True, file_okay=False))
@format_opt
@_guarded
def cmd_report(report_dir, fmt):
    """Summarize report JSON files written by ``verify --out``."""
    reports = []
    for p in sorted(Path(report_dir).glob("*.json")):
        try:
            reports.append(json.loads(p.read_text()))
        except json.JSONDecodeError as e:
            raise SchemaError(f"{p.name}: {e}", path="/") from None
    if not reports:
        raise SchemaError("no report files found", path=report_dir)
    if fmt == "json":
        click.echo(json.dumps({"scenarios": len(reports),
                               "passed": sum(r["passed"] for r in reports),
                               "failed": [r["scenario_id"] for r in reports if not r["passed"]]}, indent=2))
    else:
        click.echo(_report_table(reports))
    sys.exit(EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAIL)


if __name__ == "__main__":
    main()
