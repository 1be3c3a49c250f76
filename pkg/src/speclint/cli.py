"""Command-line front end.

Exit codes:
  0  clean: no lint issues / satisfied non-vacuously / falsified / mined
  1  lint issues found, or the trace falsifies the formula
  2  usage, parse, fragment or runtime error
  3  falsification budget exhausted without a counterexample
  4  satisfied, but at least one implication held vacuously
"""

from __future__ import annotations

import json
import os
import shlex
import sys
from fractions import Fraction
from pathlib import Path

import click

from speclint.debugger import lint
from speclint.falsifier import (
    Grid,
    SearchConfig,
    clamp,
    falsify,
    mining_rounds,
    simulate_candidate,
)
from speclint.logic import FormulaError, ParseError, format_rational, parse, to_text
from speclint.monitor import MonitorError, check_adequacy, eval_bool, robustness, signal_vacuity
from speclint.plant import ModelSpec, SimulationError, resolve_model
from speclint.templates import (
    TemplateError,
    example_instance,
    instantiate,
    is_template_literal,
    list_templates,
    parse_template,
)
from speclint.trace import Trace, TraceError

EXIT_OK, EXIT_ISSUES, EXIT_ERROR, EXIT_BUDGET, EXIT_VACUOUS = 0, 1, 2, 3, 4


class UserError(Exception):
    pass


def _color() -> bool:
    return os.environ.get("SPECLINT_COLOR", "1") != "0"


def _style(text, **kw):
    return click.style(text, **kw) if _color() else text


def _rat(value) -> Fraction | None:
    if value is None:
        return None
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"not a rational number: {value!r}") from None


def _dump(data) -> str:
    return json.dumps(data, indent=2)


def load_spec(arg: str):
    """Formula from a file, from a template literal, or from a file holding a template literal."""
    if is_template_literal(arg):
        return instantiate(parse_template(arg))
    path = Path(arg)
    if not path.is_file():
        raise UserError(f"no such specification file: {arg}")
    text = path.read_text()
    if is_template_literal(text):
        return instantiate(parse_template(text))
    try:
        return parse(text)
    except ParseError as e:
        raise UserError(f"{arg}:{e}") from None


def _fail(message: str):
    click.echo(_style("error: ", fg="red") + message, err=True)
    sys.exit(EXIT_ERROR)


def _guard(fn):
    """Turn expected failures into exit code 2 with a one-line diagnostic."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (UserError, FormulaError, TemplateError, MonitorError, TraceError, SimulationError, ValueError) as e:
            _fail(str(e))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(package_name="artifact", prog_name="speclint")
def main():
    """Debug, monitor and falsify bounded MITL specifications."""


@main.command("lint")
@click.argument("spec")
@click.option("--delta", help="Time step of the discretization (default: gcd of interval endpoints).")
@click.option("--horizon", help="Unrolling horizon (default: the formula horizon).")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
@_guard
def lint_cmd(spec, delta, horizon, fmt):
    """Check SPEC for validity, redundancy and vacuity issues."""
    f = load_spec(spec)
    report = lint(f, _rat(delta), _rat(horizon))
    click.echo(report.dumps() if fmt == "json" else report.render_text())
    if report.error:
        sys.exit(EXIT_ERROR)
    sys.exit(EXIT_ISSUES if report.issues else EXIT_OK)


@main.command("monitor")
@click.argument("spec")
@click.argument("trace_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--t0", default="0", show_default=True, help="Evaluation time (must be a sample instant).")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
@_guard
def monitor_cmd(spec, trace_csv, t0, fmt):
    """Evaluate SPEC on TRACE_CSV and report robustness and vacuous implications."""
    f = load_spec(spec)
    tr = Trace.read(trace_csv)
    t0 = _rat(t0)
    adequacy = check_adequacy(f, tr, t0)
    if not adequacy:
        raise UserError(f"trace is inadequate: missing {format_rational(adequacy.missing)} time units")
    verdict = eval_bool(f, tr, t0)
    rho = clamp(robustness(f, tr, t0))
    flags = signal_vacuity(f, tr) if verdict else []
    vacuous = any(fl.vacuous for fl in flags)
    data = {
        "formula": to_text(f),
        "t0": format_rational(t0),
        "verdict": "satisfied" if verdict else "falsified",
        "robustness": rho,
        "vacuous": vacuous,
        "vacuity": [
            {"path": list(fl.path), "antecedent": to_text(fl.antecedent), "verdict": fl.verdict} for fl in flags
        ],
    }
    if fmt == "json":
        click.echo(_dump(data))
    else:
        color = "green" if verdict and not vacuous else ("yellow" if verdict else "red")
        label = data["verdict"] + (" (vacuously)" if vacuous else "")
        click.echo(f"formula: {data['formula']}")
        click.echo(f"verdict: {_style(label, fg=color)}")
        click.echo(f"robustness: {rho!r}")
        for fl in data["vacuity"]:
            click.echo(f"antecedent {fl['antecedent']} at {fl['path']}: {fl['verdict']}")
    if not verdict:
        sys.exit(EXIT_ISSUES)
    sys.exit(EXIT_VACUOUS if vacuous else EXIT_OK)


def search_options(fn):
    opts = [
        click.option("--model", required=True, help="secondorder, cruise, builtin_* or external."),
        click.option("--external-cmd", help="Command line of an external model (with --model external)."),
        click.option("--model-param", multiple=True, help="Model parameter override NAME=VALUE (repeatable)."),
        click.option("--step", type=float, default=0.01, show_default=True, help="Integrator step."),
        click.option("--sample-period", default="0.1", show_default=True, help="Output sample period."),
        click.option("--sim-horizon", help="Simulation length (default: formula horizon or last control time)."),
        click.option("--grid", "grid_path", required=True, type=click.Path(exists=True, dir_okay=False)),
        click.option("--budget", type=int, default=200, show_default=True, help="Simulations per search."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--sample-size", type=int, default=8, show_default=True, help="Neighbours sampled per move."),
        click.option("--stall", type=int, default=10, show_default=True, help="Stalls before refining/restarting."),
        click.option("--refinements", type=int, default=3, show_default=True),
        click.option("--tabu", type=int, default=1000, show_default=True, help="Tabu list capacity."),
        click.option("--restarts", type=int, default=None, help="Restart limit (default unlimited)."),
        click.option("--jobs", type=int, default=1, show_default=True, help="Parallel neighbour evaluations."),
        click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_model(model, external_cmd, model_param, step, sample_period, sim_horizon) -> ModelSpec:
    kind = resolve_model(model)
    params = {}
    for item in model_param:
        name, sep, value = item.partition("=")
        if not sep:
            raise UserError(f"--model-param expects NAME=VALUE, got {item!r}")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise UserError(f"bad value for model parameter {name}: {value!r}") from None
    command = tuple(shlex.split(external_cmd)) if external_cmd else ()
    if kind != "external" and command:
        raise UserError("--external-cmd only applies to --model external")
    return ModelSpec(
        kind,
        params,
        integrator_step=step,
        output_sample_period=_rat(sample_period),
        command=command,
        horizon=_rat(sim_horizon),
    )


def build_search(budget, seed, sample_size, stall, refinements, tabu, restarts, jobs) -> SearchConfig:
    return SearchConfig(
        budget=budget,
        seed=seed,
        neighbor_sample_size=sample_size,
        stall_threshold=stall,
        max_refinements=refinements,
        tabu_capacity=tabu,
        restart_limit=restarts,
        jobs=jobs,
    )


def _model_json(m: ModelSpec) -> dict:
    out = {"kind": m.kind, "parameters": dict(m.parameters), "integrator_step": m.integrator_step,
           "output_sample_period": format_rational(m.output_sample_period)}
    if m.command:
        out["command"] = list(m.command)
    return out


@main.command("falsify")
@click.argument("spec")
@search_options
@click.option("--out", type=click.Path(dir_okay=False), help="Also write the JSON result to this file.")
@click.option("--dump-trace", type=click.Path(dir_okay=False), help="Write the best trace as CSV.")
@_guard
def falsify_cmd(spec, model, external_cmd, model_param, step, sample_period, sim_horizon, grid_path, budget, seed,
                sample_size, stall, refinements, tabu, restarts, jobs, fmt, out, dump_trace):
    """Search the input grid for a simulation that violates SPEC."""
    f = load_spec(spec)
    m = build_model(model, external_cmd, model_param, step, sample_period, sim_horizon)
    g = Grid.read(grid_path)
    cfg = build_search(budget, seed, sample_size, stall, refinements, tabu, restarts, jobs)
    res = falsify(f, m, g, cfg)
    data = {"formula": to_text(f), "model": _model_json(m), "budget": budget, "seed": seed, **res.to_json()}
    text = _dump(data)
    if out:
        Path(out).write_text(text + "\n")
    if dump_trace:
        Path(dump_trace).write_text(simulate_candidate(f, m, res.best_candidate, res.best_grid).to_csv())
    if fmt == "json":
        click.echo(text)
    else:
        color = "red" if res.falsified else "green"
        click.echo(f"formula: {data['formula']}")
        click.echo(f"status: {_style(res.status, fg=color)}")
        click.echo(f"best robustness: {res.best_robustness!r}")
        click.echo(f"simulations: {res.simulations_used}/{budget}  refinements: {res.refinements}  restarts: {res.restarts}")
        for name, pts in data["best_candidate"].items():
            click.echo(f"input {name}: " + " ".join(f"{t}:{v!r}" for t, v in pts))
    sys.exit(EXIT_OK if res.falsified else EXIT_BUDGET)


@main.command("mine")
@click.argument("template")
@click.option("--param", required=True, help="Monotone template parameter to mine.")
@click.option("--lo", type=float, required=True, help="Value assumed falsifiable.")
@click.option("--hi", type=float, required=True, help="Value assumed not falsifiable.")
@click.option("--iters", type=int, default=6, show_default=True, help="Bisection rounds.")
@search_options
@_guard
def mine_cmd(template, param, lo, hi, iters, model, external_cmd, model_param, step, sample_period, sim_horizon,
             grid_path, budget, seed, sample_size, stall, refinements, tabu, restarts, jobs, fmt):
    """Mine the tightest value of a template parameter that the search cannot falsify."""
    if not is_template_literal(template) and Path(template).is_file():
        template = Path(template).read_text()
    t = parse_template(template)
    m = build_model(model, external_cmd, model_param, step, sample_period, sim_horizon)
    g = Grid.read(grid_path)
    cfg = build_search(budget, seed, sample_size, stall, refinements, tabu, restarts, jobs)
    rounds = list(mining_rounds(t, param, lo, hi, m, g, cfg, iters))
    value = rounds[-1].hi if rounds else Fraction(repr(hi))
    data = {
        "template": t.to_literal(),
        "parameter": param,
        "lo": lo,
        "hi": hi,
        "iterations": iters,
        "value": float(value),
        "rounds": [
            {"value": float(r.value), "status": r.status, "simulations": r.simulations, "lo": float(r.lo), "hi": float(r.hi)}
            for r in rounds
        ],
    }
    if fmt == "json":
        click.echo(_dump(data))
    else:
        click.echo(f"template: {data['template']}")
        for i, r in enumerate(data["rounds"], 1):
            click.echo(f"round {i}: {param}={r['value']!r} {r['status']} ({r['simulations']} sims)")
        click.echo(f"{param} = {_style(repr(data['value']), bold=True)}  (not falsified within budget; not a proof)")
    sys.exit(EXIT_OK)


@main.command("templates")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text", show_default=True)
def templates_cmd(fmt):
    """List the available signal templates."""
    catalog = []
    for spec in list_templates():
        catalog.append(
            {
                "id": spec.id,
                "doc": spec.doc,
                "parameters": list(spec.parameter_names),
                "monotone": list(spec.monotone),
                "example": example_instance(spec).to_literal(),
                "formula": to_text(instantiate(example_instance(spec))),
            }
        )
    if fmt == "json":
        click.echo(_dump(catalog))
        return
    for entry in catalog:
        click.echo(f"{entry['id']}({', '.join(entry['parameters'])}): {entry['doc']}")
        click.echo(f"    e.g. {entry['example']}  =>  {entry['formula']}")
