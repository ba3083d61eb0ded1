"""Command-line front end.

Every subcommand builds a :class:`RunConfig` and hands it to :func:`run`,
which writes a CSV or JSON artifact (to ``--output`` or stdout) and returns
the exit status: 0 on success, 1 when a verification fails, 2 on usage,
parse or precondition errors. Errors are reported as JSON on stderr.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import conjugate as cj
from . import cramer as cr
from . import io as cio
from . import operators as op
from . import tentropy as te
from . import tilting as tl
from . import verify

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    action: str | None = None
    input: str | None = None
    system: str | None = None
    matrix: str | None = None
    dist: str | None = None
    grid: str | None = None
    phi: str | None = None
    nu: str | None = None
    mean: float | None = None
    series: str | None = None
    method: str | None = None
    quantity: str | None = None
    output: str | None = None
    seed: int = verify.DEFAULT_SEED
    tol: float | None = None
    cap: float | None = None
    truncation: int | None = None
    max_terms: int | None = None


class UsageProblem(ValueError):
    pass


def parse_range(text: str) -> np.ndarray:
    """``lo:hi:step`` -> inclusive grid, robust to floating-point step counts."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageProblem(f"grid must be lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise UsageProblem("grid needs step > 0 and hi >= lo")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise UsageProblem(f"expected comma-separated numbers, got {text!r}") from None


def _need(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageProblem(f"{cfg.command}: missing --{', --'.join(m.replace('_', '-') for m in missing)}")


def _system(cfg: RunConfig) -> op.FiniteDynamicalSystem:
    _need(cfg, "system")
    s = cio.load_system(cfg.system)
    if cfg.phi is not None:
        s = s.with_phi(parse_vector(cfg.phi))
    return s


def _dist(cfg: RunConfig) -> cr.DistributionSpec:
    _need(cfg, "dist")
    path = Path(cfg.dist)
    if cfg.dist.endswith(".json") and path.is_file():
        return cr.parse_distribution(path.read_text())
    return cr.parse_distribution(cfg.dist)


# handlers return (artifact text, exit status) ------------------------------------

def _run_conjugate(cfg: RunConfig):
    _need(cfg, "input")
    f = cio.grid_from_csv(Path(cfg.input).read_text())
    if cfg.action == "biconjugate":
        g = cj.biconjugate(f)
        return cio.grid_to_csv(g.grid, g.values, ("x", "biconjugate")), EXIT_OK
    _need(cfg, "grid")
    g = cj.lf_transform(f, parse_range(cfg.grid), method=cfg.method or "fast")
    return cio.grid_to_csv(g.grid, g.values, ("a", "conjugate")), EXIT_OK


_CRAMER_QUANTITIES = ("rate", "cgf", "mgf", "pgf", "cgf-exp-conjugate", "rate-exp-conjugate")


def _run_cramer(cfg: RunConfig):
    _need(cfg, "grid")
    d = _dist(cfg)
    x = parse_range(cfg.grid)
    q = cfg.quantity or "rate"
    method = cfg.method or "auto"
    if q == "rate":
        v = cr.cramer_transform(d, x)
    elif q == "cgf":
        v = cr.cgf(d, x)
    elif q == "mgf":
        v = cr.mgf(d, x)
    elif q == "pgf":
        v = cr.pgf(d, x)
    elif q == "cgf-exp-conjugate":
        v = [cr.cgf_exp_conjugate(d, a, method=method) for a in x]
    elif q == "rate-exp-conjugate":
        v = cr.cramer_star_exp_conjugate(d, x, method=method)
    else:
        raise UsageProblem(f"unknown quantity {q!r}")
    head = "a" if q in ("rate", "cgf-exp-conjugate", "rate-exp-conjugate") else ("s" if q == "pgf" else "t")
    return cio.grid_to_csv(x, np.asarray(v, dtype=float), (head, q)), EXIT_OK


def _run_tilting(cfg: RunConfig):
    _need(cfg, "mean")
    problem = cfg.action or "entropy"
    if problem == "entropy":
        sol = tl.min_entropy_given_mean(cfg.mean, cfg.truncation)
    elif problem == "moments":
        sol = tl.min_form3(_dist(cfg), cfg.mean, cfg.truncation)
    elif problem == "contraction":
        sol = tl.contraction_discrete(_dist(cfg), cfg.mean, cfg.truncation)
    else:
        raise UsageProblem(f"unknown tilting problem {problem!r}")
    return cio.dumps(sol.to_json()), EXIT_OK


def _series(cfg: RunConfig) -> op.OperatorSeriesSpec:
    name = cfg.series or "exp"
    kind, _, arg = name.partition(":")
    if kind == "exp":
        return op.exp_series()
    if kind == "cosh":
        return op.cosh_series()
    if kind == "geometric":
        return op.geometric_series(float(arg) if arg else 1.0)
    if kind == "mgf":
        return op.mgf_series(_dist(cfg))
    if kind == "pgf":
        return op.pgf_series(_dist(cfg))
    raise UsageProblem(f"unknown series {name!r}")


def _matrix(cfg: RunConfig) -> np.ndarray:
    if cfg.matrix is not None:
        return cio.matrix_from_csv(Path(cfg.matrix).read_text())
    if cfg.system is not None:
        return op.wco_matrix(_system(cfg))
    raise UsageProblem("operators: give --system or --matrix")


def _run_operators(cfg: RunConfig):
    action = cfg.action or "radius"
    if action == "lambda":
        s = _system(cfg)
        out = {"lambda": op.lambda_functional(s, "cycles"),
               "lambda_numeric": op.lambda_functional(s, "numeric"),
               "cycles": [list(c) for c in s.cycles]}
        return cio.dumps(out), EXIT_OK
    A = _matrix(cfg)
    if action == "matrix":
        return cio.matrix_to_csv(A), EXIT_OK
    if action == "radius":
        return cio.dumps({"spectral_radius": op.spectral_radius(A, tol=cfg.tol)}), EXIT_OK
    if action == "series":
        return cio.matrix_to_csv(op.operator_series(_series(cfg), A, cfg.tol, cfg.max_terms)), EXIT_OK
    if action == "check":
        return cio.dumps(op.check_rfA(_series(cfg), A)), EXIT_OK
    if action == "pgf":
        return cio.dumps(op.pgf_of_operator(_dist(cfg), A)), EXIT_OK
    raise UsageProblem(f"unknown operators action {action!r}")


def _run_tentropy(cfg: RunConfig):
    action = cfg.action or "duality"
    s = _system(cfg)
    oracle = te.TEntropyOracle.numeric(cap=cfg.cap)
    if action == "lambda-star":
        _need(cfg, "nu")
        nu = parse_vector(cfg.nu)
        return cio.dumps({"lambda_star": te.lambda_conjugate_numeric(s, nu, cap=cfg.cap),
                          "invariant": te.invariant_check(s, nu) if s.is_bijective else None}), EXIT_OK
    d = _dist(cfg)
    if action == "tilde":
        return cio.dumps({"lambda_tilde": te.lambda_tilde(s, d)}), EXIT_OK
    if action == "hat":
        return cio.dumps({"lambda_hat": te.lambda_hat(s, d)}), EXIT_OK
    if action in ("tilde-conjugate", "hat-conjugate"):
        _need(cfg, "nu")
        nu = parse_vector(cfg.nu)
        func = te.lambda_tilde_conjugate if action == "tilde-conjugate" else te.lambda_hat_conjugate
        return cio.dumps({"conjugate": func(oracle, s, d, nu), "mass": float(nu.sum())}), EXIT_OK
    if action == "duality":
        which = cfg.method or ("hat" if d.discrete else "tilde")
        rep = te.duality_reconstruct(oracle, s, d, which)
        return cio.dumps(rep.to_json()), EXIT_OK
    raise UsageProblem(f"unknown tentropy action {action!r}")


def _run_verify(cfg: RunConfig):
    results = verify.run_all(cfg.seed)
    for r in results:
        click.echo(r.line(), err=True)
    summary = {"seed": cfg.seed,
               "passed": all(r.passed for r in results),
               "criteria": [{k: v for k, v in r.to_json().items() if k != "seconds"} for r in results]}
    return cio.dumps(summary), EXIT_OK if summary["passed"] else EXIT_VERIFY


_HANDLERS = {
    "conjugate": _run_conjugate,
    "cramer": _run_cramer,
    "tilting": _run_tilting,
    "operators": _run_operators,
    "tentropy": _run_tentropy,
    "verify-all": _run_verify,
}


def error_json(exc: BaseException) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True)


def run(config: RunConfig) -> int:
    """Execute one command; write its artifact and return the exit status."""
    try:
        handler = _HANDLERS[config.command]
    except KeyError:
        click.echo(error_json(UsageProblem(f"unknown command {config.command!r}")), err=True)
        return EXIT_USAGE
    try:
        text, status = handler(config)
    except (ValueError, KeyError, OSError) as exc:
        click.echo(error_json(exc), err=True)
        return EXIT_USAGE
    if config.output:
        Path(config.output).write_text(text)
    else:
        click.echo(text, nl=False)
    return status


# click layer ---------------------------------------------------------------------

_output = click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write here instead of stdout.")


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """Cramér transforms, WCO spectral exponents and t-entropy duality."""


@cli.command()
@click.option("--input", "input_", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Two-column CSV (x, f(x)); 'inf' marks +inf.")
@click.option("--grid", help="Dual grid lo:hi:step.")
@click.option("--biconjugate", is_flag=True, help="Return f** on the input grid instead.")
@click.option("--method", type=click.Choice(["fast", "direct"]), default="fast", show_default=True)
@_output
def conjugate(input_, grid, biconjugate, method, output):
    """Discrete Legendre-Fenchel transform of a sampled function."""
    sys.exit(run(RunConfig("conjugate", "biconjugate" if biconjugate else "transform",
                           input=input_, grid=grid, method=method, output=output)))


@cli.command()
@click.option("--dist", required=True, help="exponential:MU, poisson:MU, finite:P0,P1,... or JSON.")
@click.option("--grid", required=True, help="Abscissae lo:hi:step.")
@click.option("--quantity", type=click.Choice(_CRAMER_QUANTITIES), default="rate", show_default=True)
@click.option("--method", type=click.Choice(["auto", "compose", "grid"]), default="auto", show_default=True)
@_output
def cramer(dist, grid, quantity, method, output):
    """Tabulate the Cramér transform or a related function of a law."""
    sys.exit(run(RunConfig("cramer", dist=dist, grid=grid, quantity=quantity,
                           method=method, output=output)))


@cli.command()
@click.argument("problem", type=click.Choice(["entropy", "moments", "contraction"]))
@click.option("--mean", "-a", type=float, required=True)
@click.option("--dist")
@click.option("--truncation", "-N", type=int, help="Last index kept (default 300).")
@_output
def tilting(problem, mean, dist, truncation, output):
    """Minimal entropy over sequences with a prescribed mean."""
    sys.exit(run(RunConfig("tilting", problem, dist=dist, mean=mean,
                           truncation=truncation, output=output)))


@cli.command()
@click.argument("action", type=click.Choice(["radius", "lambda", "matrix", "series", "check", "pgf"]))
@click.option("--system", type=click.Path(exists=True, dir_okay=False))
@click.option("--matrix", type=click.Path(exists=True, dir_okay=False))
@click.option("--phi", help="Override the system's weights, comma-separated.")
@click.option("--series", help="exp, cosh, geometric:MU, mgf or pgf (with --dist).")
@click.option("--dist")
@click.option("--tol", type=float)
@click.option("--max-terms", type=int)
@_output
def operators(action, system, matrix, phi, series, dist, tol, max_terms, output):
    """Spectral radius, spectral exponent and power series of operators."""
    sys.exit(run(RunConfig("operators", action, system=system, matrix=matrix, phi=phi,
                           series=series, dist=dist, tol=tol, max_terms=max_terms,
                           output=output)))


@cli.command()
@click.argument("action", type=click.Choice(["duality", "lambda-star", "tilde", "hat",
                                             "tilde-conjugate", "hat-conjugate"]))
@click.option("--system", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dist")
@click.option("--phi", help="Override the system's weights, comma-separated.")
@click.option("--nu", help="Measure as comma-separated weights.")
@click.option("--which", type=click.Choice(["tilde", "hat"]),
              help="Functional to rebuild (default: hat for integer laws, else tilde).")
@click.option("--cap", type=float, help="Values above this count as +inf (default 1e3).")
@_output
def tentropy(action, system, dist, phi, nu, which, cap, output):
    """Conjugates of the spectral exponent and duality reconstruction."""
    sys.exit(run(RunConfig("tentropy", action, system=system, dist=dist, phi=phi, nu=nu,
                           method=which, cap=cap, output=output)))


@cli.command("verify-all")
@click.option("--seed", type=int, default=verify.DEFAULT_SEED, show_default=True)
@_output
def verify_all(seed, output):
    """Run the acceptance sweeps and write a pass/fail summary."""
    sys.exit(run(RunConfig("verify-all", seed=seed, output=output)))


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, prog_name="cramer-tentropy", standalone_mode=False)
    except click.ClickException as exc:
        click.echo(error_json(exc), err=True)
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
