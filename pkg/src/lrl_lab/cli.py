"""
Command-line interface for the LRL laboratory.

This module provides:
- The typer application with the simulate, verify, orbit, period, lawscan,
  pbcheck, reduce, expr and schema subcommands
- run(argv), mapping outcomes to exit codes: 0 success, 1 domain error
  (JSON error on stderr), 2 usage error
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
import typer
from pydantic import ValidationError
from typing_extensions import Annotated

from .api.base import CommandResult, load_config, render, write_output
from .api.schemas import OUTPUT_MODELS, RunConfig, json_schema
from .api.simulation_tools import run_simulate, run_verify
from .api.orbit_tools import run_orbit, run_period, run_lawscan
from .api.algebra_tools import run_pbcheck
from .api.reduction_tools import run_reduce
from .api.expression_tools import run_expr
from .utils.exceptions import LabError

logger = logging.getLogger("lrl-lab.cli")

app = typer.Typer(name="lrl-lab", add_completion=False, no_args_is_help=True,
                  help="Numerical laboratory for Kepler-type systems and their LRL vectors.")

# ---------------------------------------------------------------- shared options

ConfigOpt = Annotated[Optional[Path], typer.Option("--config", help="RunConfig JSON file; flags override it")]
ModelOpt = Annotated[Optional[str], typer.Option("--model", help="Model family")]
MuOpt = Annotated[Optional[float], typer.Option("--mu")]
LambdaOpt = Annotated[Optional[float], typer.Option("--lambda")]
AlphaOpt = Annotated[Optional[float], typer.Option("--alpha")]
BetaOpt = Annotated[Optional[float], typer.Option("--beta")]
KOpt = Annotated[Optional[float], typer.Option("--k")]
ParamOpt = Annotated[Optional[List[str]], typer.Option("--param", help="Extra parameter name=value")]
FnOpt = Annotated[Optional[List[str]], typer.Option("--fn", help="Function slot name=expression")]
R0Opt = Annotated[Optional[str], typer.Option("--r0", help="Initial position x,y,z")]
V0Opt = Annotated[Optional[str], typer.Option("--v0", help="Initial velocity vx,vy,vz")]
T0Opt = Annotated[Optional[float], typer.Option("--t0")]
SpanOpt = Annotated[Optional[float], typer.Option("--t", help="Integration span")]
RelOpt = Annotated[Optional[float], typer.Option("--rel-tol")]
AbsOpt = Annotated[Optional[float], typer.Option("--abs-tol")]
StepsOpt = Annotated[Optional[int], typer.Option("--max-steps")]
OutOpt = Annotated[Optional[str], typer.Option("--out", help="Output file; stdout when omitted")]
FormatOpt = Annotated[Optional[str], typer.Option("--format", help="csv or json")]


def _numbers(text: str, name: str, size: Optional[int] = None) -> List[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise typer.BadParameter(f"{name} must be comma-separated numbers, got {text!r}")
    if size is not None and len(values) != size:
        raise typer.BadParameter(f"{name} needs {size} components, got {len(values)}")
    return values


def _pairs(items: Optional[List[str]], name: str) -> Dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise typer.BadParameter(f"{name} expects name=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _prune(d: Dict[str, Any]) -> Dict[str, Any]:
    """Drop unset flags so they do not override the config file."""
    out = {}
    for key, value in d.items():
        if isinstance(value, dict):
            value = _prune(value)
            if value:
                out[key] = value
        elif value is not None:
            out[key] = value
    return out


def _model_flags(model, mu, lam, alpha, beta, k, params, fns) -> Dict[str, Any]:
    numeric: Dict[str, Any] = {"mu": mu, "lambda": lam, "alpha": alpha, "beta": beta, "k": k}
    for key, value in _pairs(params, "--param").items():
        try:
            numeric[key] = float(value)
        except ValueError:
            numeric[key] = value
    return {"model": {"family": model, "params": numeric, "functions": _pairs(fns, "--fn") or None}}


def _state_flags(r0, v0, t0) -> Dict[str, Any]:
    return {"state": {"r0": _numbers(r0, "--r0", 3) if r0 else None,
                      "v0": _numbers(v0, "--v0", 3) if v0 else None, "t0": t0}}


def _common_flags(t, rel_tol, abs_tol, max_steps, out, fmt) -> Dict[str, Any]:
    return {"integration": {"t": t, "rel_tol": rel_tol, "abs_tol": abs_tol, "max_steps": max_steps},
            "output": {"path": out, "format": fmt}}


def _config(config_file: Optional[Path], *flag_blocks: Dict[str, Any]) -> RunConfig:
    base: Dict[str, Any] = {}
    if config_file is not None:
        try:
            base = json.loads(config_file.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise typer.BadParameter(f"Cannot read config {config_file}: {e}")
    flags: Dict[str, Any] = {}
    for block in flag_blocks:
        flags = _merge(flags, _prune(block))
    return load_config(_merge(base, flags))


def _need(cfg: RunConfig, command: str, model: bool = True, state: bool = True) -> None:
    if model and cfg.model is None:
        raise click.UsageError(f"{command} needs a model: give --model or a --config file")
    if state and (cfg.state is None):
        raise click.UsageError(f"{command} needs an initial state: give --r0 and --v0 or a --config file")


def _emit(runner: Callable[[RunConfig], CommandResult], cfg: RunConfig) -> None:
    result = runner(cfg)
    path = write_output(result, cfg.output)
    if path is None:
        typer.echo(render(result, cfg.output.format), nl=False)
    else:
        typer.echo(json.dumps({"success": True, "message": result.message, "path": path}, sort_keys=True))


def _run_model_command(command, runner, config, model, mu, lam, alpha, beta, k, param, fn, r0, v0, t0,
                       t, rel_tol, abs_tol, max_steps, out, fmt, extra=None) -> None:
    cfg = _config(config, _model_flags(model, mu, lam, alpha, beta, k, param, fn), _state_flags(r0, v0, t0),
                  _common_flags(t, rel_tol, abs_tol, max_steps, out, fmt), extra or {})
    _need(cfg, command)
    _emit(runner, cfg)


# ---------------------------------------------------------------- commands

@app.callback()
def _main(verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log progress to stderr")] = False):
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True
    )


@app.command()
def simulate(config: ConfigOpt = None, model: ModelOpt = None, mu: MuOpt = None, lam: LambdaOpt = None,
             alpha: AlphaOpt = None, beta: BetaOpt = None, k: KOpt = None, param: ParamOpt = None,
             fn: FnOpt = None, r0: R0Opt = None, v0: V0Opt = None, t0: T0Opt = None, t: SpanOpt = None,
             rel_tol: RelOpt = None, abs_tol: AbsOpt = None, max_steps: StepsOpt = None,
             out: OutOpt = None, fmt: FormatOpt = None):
    """Integrate a model; CSV rows carry the state and every invariant."""
    _run_model_command("simulate", run_simulate, config, model, mu, lam, alpha, beta, k, param, fn, r0, v0, t0,
                       t, rel_tol, abs_tol, max_steps, out, fmt)


@app.command()
def verify(config: ConfigOpt = None, model: ModelOpt = None, mu: MuOpt = None, lam: LambdaOpt = None,
           alpha: AlphaOpt = None, beta: BetaOpt = None, k: KOpt = None, param: ParamOpt = None,
           fn: FnOpt = None, r0: R0Opt = None, v0: V0Opt = None, t0: T0Opt = None, t: SpanOpt = None,
           rel_tol: RelOpt = None, abs_tol: AbsOpt = None, max_steps: StepsOpt = None,
           out: OutOpt = None, fmt: FormatOpt = "json"):
    """Integrate and report invariant drift as JSON."""
    _run_model_command("verify", run_verify, config, model, mu, lam, alpha, beta, k, param, fn, r0, v0, t0,
                       t, rel_tol, abs_tol, max_steps, out, fmt)


@app.command()
def orbit(config: ConfigOpt = None, model: ModelOpt = None, mu: MuOpt = None, lam: LambdaOpt = None,
          alpha: AlphaOpt = None, beta: BetaOpt = None, k: KOpt = None, param: ParamOpt = None,
          fn: FnOpt = None, r0: R0Opt = None, v0: V0Opt = None, t0: T0Opt = None, t: SpanOpt = None,
          rel_tol: RelOpt = None, abs_tol: AbsOpt = None, max_steps: StepsOpt = None,
          out: OutOpt = None, fmt: FormatOpt = None,
          theta_start: Annotated[Optional[float], typer.Option("--theta-start")] = None,
          theta_stop: Annotated[Optional[float], typer.Option("--theta-stop")] = None,
          count: Annotated[Optional[int], typer.Option("--count")] = None,
          compare: Annotated[Optional[bool], typer.Option("--compare/--no-compare")] = None):
    """Tabulate the closed-form orbit r(theta)."""
    extra = {"orbit": {"theta_start": theta_start, "theta_stop": theta_stop, "count": count, "compare": compare}}
    _run_model_command("orbit", run_orbit, config, model, mu, lam, alpha, beta, k, param, fn, r0, v0, t0,
                       t, rel_tol, abs_tol, max_steps, out, fmt, extra)


@app.command()
def period(config: ConfigOpt = None, model: ModelOpt = None, mu: MuOpt = None, lam: LambdaOpt = None,
           alpha: AlphaOpt = None, beta: BetaOpt = None, k: KOpt = None, param: ParamOpt = None,
           fn: FnOpt = None, r0: R0Opt = None, v0: V0Opt = None, t0: T0Opt = None, t: SpanOpt = None,
           rel_tol: RelOpt = None, abs_tol: AbsOpt = None, max_steps: StepsOpt = None,
           out: OutOpt = None, fmt: FormatOpt = "json"):
    """Period and third-law residual of a Kepler, power-law or MICZ orbit."""
    _run_model_command("period", run_period, config, model, mu, lam, alpha, beta, k, param, fn, r0, v0, t0,
                       t, rel_tol, abs_tol, max_steps, out, fmt)


@app.command()
def reduce(config: ConfigOpt = None, model: ModelOpt = None, mu: MuOpt = None, lam: LambdaOpt = None,
           alpha: AlphaOpt = None, beta: BetaOpt = None, k: KOpt = None, param: ParamOpt = None,
           fn: FnOpt = None, r0: R0Opt = None, v0: V0Opt = None, t0: T0Opt = None, t: SpanOpt = None,
           rel_tol: RelOpt = None, abs_tol: AbsOpt = None, max_steps: StepsOpt = None,
           out: OutOpt = None, fmt: FormatOpt = None,
           dy: Annotated[Optional[float], typer.Option("--dy")] = None):
    """Reduce a trajectory to (y, u1, u1', u2 [, u3])."""
    _run_model_command("reduce", run_reduce, config, model, mu, lam, alpha, beta, k, param, fn, r0, v0, t0,
                       t, rel_tol, abs_tol, max_steps, out, fmt, {"reduce": {"dy": dy}})


@app.command()
def lawscan(config: ConfigOpt = None,
            alphas: Annotated[Optional[str], typer.Option("--alphas", help="Comma-separated exponents")] = None,
            eccentricities: Annotated[Optional[str], typer.Option("--eccentricities")] = None,
            mu: MuOpt = None,
            rel_tol: RelOpt = None,
            workers: Annotated[Optional[int], typer.Option("--workers")] = None,
            out: OutOpt = None, fmt: FormatOpt = None):
    """Measure the generalised third law over an (alpha, e) grid."""
    block = {"lawscan": {"alphas": _numbers(alphas, "--alphas") if alphas else None,
                         "eccentricities": _numbers(eccentricities, "--eccentricities") if eccentricities else None,
                         "mu": mu, "rel_tol": rel_tol, "workers": workers},
             "output": {"path": out, "format": fmt}}
    _emit(run_lawscan, _config(config, block))


@app.command()
def pbcheck(config: ConfigOpt = None,
            suite: Annotated[Optional[str], typer.Option("--suite")] = None,
            mu: MuOpt = None, lam: LambdaOpt = None, alpha: AlphaOpt = None, beta: BetaOpt = None,
            points: Annotated[Optional[int], typer.Option("--points")] = None,
            seed: Annotated[Optional[int], typer.Option("--seed")] = None,
            workers: Annotated[Optional[int], typer.Option("--workers")] = None,
            out: OutOpt = None):
    """Check the bracket relations of a Poisson-bracket suite; JSON residual table."""
    params = {"mu": mu, "lambda": lam, "alpha": alpha, "beta": beta}
    block = {"pbcheck": {"suite": suite, "params": params, "points": points, "seed": seed, "workers": workers},
             "output": {"path": out, "format": "json"}}
    _emit(run_pbcheck, _config(config, block))


@app.command()
def expr(text: Annotated[str, typer.Argument(help="Function string")],
         var: Annotated[str, typer.Option("--var", help="Independent variable")] = "th",
         at: Annotated[Optional[float], typer.Option("--at")] = None,
         param: ParamOpt = None):
    """Parse, differentiate and optionally evaluate a function string."""
    try:
        params = {k: float(v) for k, v in _pairs(param, "--param").items()}
    except ValueError:
        raise typer.BadParameter("--param values must be numbers")
    block = {"expr": {"text": text, "var": var, "at": at, "params": params}, "output": {"format": "json"}}
    _emit(run_expr, _config(None, block))


@app.command()
def schema(command: Annotated[str, typer.Argument(help="'config' or a subcommand name")] = "config"):
    """Print the JSON schema of RunConfig or of a subcommand's output."""
    try:
        typer.echo(json.dumps(json_schema(command), indent=2, sort_keys=True))
    except KeyError:
        raise typer.BadParameter(f"Unknown schema {command!r}; choose config or one of {sorted(OUTPUT_MODELS)}")


# ---------------------------------------------------------------- entry point

def run(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    command = typer.main.get_command(app)
    try:
        rv = command.main(args=list(argv if argv is not None else sys.argv[1:]), prog_name="lrl-lab",
                          standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 2
    except ValidationError as e:
        typer.echo(f"Error: invalid configuration\n{e}", err=True)
        return 2
    except LabError as e:
        typer.echo(json.dumps(e.to_dict(), sort_keys=True), err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        return 1
    return rv if isinstance(rv, int) else 0
