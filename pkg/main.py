#!/usr/bin/env python3
import functools
import logging
import sys
from pathlib import Path

import click
from colorama import Fore, Style, init
from pydantic import ValidationError

from src.bench import KINDS, grid_from_spec
from src.config import Config, RunConfig, load_run_config
from src.console import log_step, setup_logging
from src.errors import PortfolioQaError
from src.orchestrator import SOLVERS, BenchmarkOrchestrator
from src.telemetry import setup_telemetry
from src.utils import load_preset, parse_bitstring, parse_float_list

init(autoreset=True)

logger = logging.getLogger("pqa")

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _error_line(code: str, kind: str, message: str) -> str:
    message = " ".join(str(message).split()).replace('"', '\\"')
    return f'error code={code} type={kind} message="{message}"'


def handle_errors(command):
    """Map pipeline failures to exit codes with one machine-parsable line on stderr"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PortfolioQaError as e:
            click.echo(f"{Fore.RED}[ERROR]{Style.RESET_ALL} {e}")
            click.echo(_error_line(e.code, type(e).__name__, e), err=True)
            sys.exit(e.exit_code)
        except ValidationError as e:
            click.echo(f"{Fore.RED}[ERROR]{Style.RESET_ALL} invalid parameters")
            click.echo(_error_line("validation", "ValidationError", e), err=True)
            sys.exit(EXIT_VALIDATION)
        except OSError as e:
            click.echo(f"{Fore.RED}[ERROR]{Style.RESET_ALL} {e}")
            click.echo(_error_line("io", type(e).__name__, e), err=True)
            sys.exit(EXIT_RUNTIME)
    return wrapper


def _parse_sizes(text):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated integers, got {text!r}")


def _run_config(ctx, **overrides) -> RunConfig:
    base = load_run_config(ctx.obj["config_path"])
    seed = overrides.pop("seed", None)
    if seed is not None:
        overrides["seed"] = seed
        for section in ("engine", "ga"):
            overrides.setdefault(section, {})["seed"] = seed
    return base.override(**overrides)


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='YAML run config (default: $PQA_CONFIG or ./config.yaml)')
@click.option('--log-file', help='Sidecar log with timestamps (default: run.log)')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output')
@click.pass_context
def cli(ctx, config_path, log_file, verbose):
    """Portfolio QUBO benchmark - annealing surrogate, classical solvers and time-to-solution sweeps"""
    settings = Config.from_env()
    setup_logging(log_file or settings.log_file, verbose)
    setup_telemetry(settings)
    ctx.obj = {
        "settings": settings,
        "config_path": config_path or settings.config_file,
        "verbose": verbose,
    }


@cli.command()
@click.option('--sizes', help='Problem sizes, e.g. 24,30,36')
@click.option('--count', type=int, help='Instances per size')
@click.option('--seed', type=int, help='Global seed')
@click.option('--rho', 'correlation', type=float, help='Pairwise asset correlation')
@click.option('--exact-cap', type=int, help='Largest N solved by enumeration')
@click.option('--registry', 'registry_dir', help='Registry directory')
@click.pass_context
@handle_errors
def generate(ctx, sizes, count, seed, correlation, exact_cap, registry_dir):
    """Generate the instance ensemble and its best-known values."""
    cfg = _run_config(
        ctx,
        seed=seed,
        exact_cap=exact_cap,
        registry_dir=registry_dir,
        market={"correlation": correlation},
        ensemble={"sizes": _parse_sizes(sizes), "per_size": count},
    )
    BenchmarkOrchestrator(cfg, ctx.obj["settings"]).generate()


@cli.command()
@click.option('--size', type=int, required=True, help='Number of logical variables')
@click.option('--defects', type=click.Path(exists=True, dir_okay=False), help='File of inactive qubit ids')
@click.option('--output', help='Embedding JSON path')
@click.pass_context
@handle_errors
def embed(ctx, size, defects, output):
    """Clique-embed K_N on a (possibly defective) C_16 Chimera graph."""
    cfg = _run_config(ctx)
    BenchmarkOrchestrator(cfg, ctx.obj["settings"]).embed(size, defects, output)


@cli.command()
@click.option('--instance', required=True, help='Registry instance id or instance JSON file')
@click.option('--solver', type=click.Choice(SOLVERS), required=True)
@click.option('--seed-state', help='Initial bitstring for reverse annealing or the GA (default: greedy for reverse)')
@click.option('--target', type=float, help='Stop once this objective value is reached (ga, hybrid)')
@click.option('--cardinality', type=click.IntRange(min=0), help='Hold exactly this many assets by bisecting a desirability shift')
@click.option('--chain-strength', type=float, help='|J_F| of the chain couplings')
@click.option('--tau', type=float, help='Annealing time in microseconds')
@click.option('--rho-us', type=float, help='Pause duration in microseconds')
@click.option('--s-pause', type=float, help='Pause location s_p')
@click.option('--budget', type=int, help='Read budget for the hybrid solver')
@click.option('--reads', type=int, help='Reads per gauge batch')
@click.option('--seed', type=int, help='Global seed')
@click.option('--schedule', type=click.Path(exists=True, dir_okay=False), help='Schedule CSV with header s,A,B')
@click.option('--registry', 'registry_dir', help='Registry directory')
@click.option('--results', 'results_dir', help='Output directory')
@click.pass_context
@handle_errors
def solve(ctx, instance, solver, seed_state, target, cardinality, chain_strength, tau, rho_us, s_pause, budget, reads, seed,
          schedule, registry_dir, results_dir):
    """Solve one instance with a single solver."""
    cfg = _run_config(
        ctx,
        seed=seed,
        registry_dir=registry_dir,
        results_dir=results_dir,
        engine={"reads_per_batch": reads},
        anneal={"chain_strength": chain_strength, "tau_us": tau, "rho_us": rho_us, "s_pause": s_pause, "budget": budget},
    )
    try:
        state = parse_bitstring(seed_state) if seed_state else None
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--seed-state")
    BenchmarkOrchestrator(cfg, ctx.obj["settings"]).solve(instance, solver, state, target, schedule, cardinality)


@cli.command()
@click.option('--grid', 'grid_spec', help='Grid preset, e.g. table2:48 (default: grid section of the config)')
@click.option('--protocol', type=click.Choice(KINDS), default="reverse", show_default=True,
              help='Annealing protocol, or ga / ga-greedy / hybrid for the classical and hybrid baselines')
@click.option('--tau', help='Annealing times in microseconds, e.g. 1,10')
@click.option('--tau-preset', type=click.Choice(["appendix_c"]), help='Named annealing-time preset')
@click.option('--sizes', help='Restrict to these problem sizes')
@click.option('--jobs', type=int, help='Parallel instances (-1: all cores)')
@click.option('--reads', type=int, help='Reads per gauge batch')
@click.option('--seed', type=int, help='Global seed')
@click.option('--schedule', type=click.Path(exists=True, dir_okay=False), help='Schedule CSV with header s,A,B')
@click.option('--registry', 'registry_dir', help='Registry directory')
@click.option('--results', 'results_dir', help='Output directory')
@click.pass_context
@handle_errors
def sweep(ctx, grid_spec, protocol, tau, tau_preset, sizes, jobs, reads, seed, schedule, registry_dir, results_dir):
    """Sweep annealing parameters over the registry and report TTS."""
    taus = parse_float_list(tau) if tau else None
    if tau_preset:
        taus = load_preset(tau_preset)["tau_us"]
    cfg = _run_config(
        ctx,
        seed=seed,
        jobs=jobs,
        registry_dir=registry_dir,
        results_dir=results_dir,
        engine={"reads_per_batch": reads},
    )
    if grid_spec:
        grid = grid_from_spec(grid_spec, taus)
    else:
        grid = cfg.grid if taus is None else cfg.grid.model_copy(update={"tau_us": taus})
    cfg = cfg.model_copy(update={"grid": grid})
    BenchmarkOrchestrator(cfg, ctx.obj["settings"]).sweep(grid, protocol, _parse_sizes(sizes), schedule)


@cli.command()
@click.option('--input', 'input_dir', default='./results', show_default=True, help='Directory holding a sweep result')
@click.option('--output', 'output_dir', help='Report directory (default: the input directory)')
@click.pass_context
@handle_errors
def report(ctx, input_dir, output_dir):
    """Write CSV / JSON / gnuplot report files for a sweep."""
    cfg = _run_config(ctx)
    BenchmarkOrchestrator(cfg, ctx.obj["settings"]).report(input_dir, output_dir)


@cli.command()
@click.argument('summary_file', default='./results/summary.json')
def view_table(summary_file):
    """
    Display a sweep summary as tables.

    SUMMARY_FILE: summary.json path or a results directory
    """
    from src.table_viewer import load_and_display_summary

    path = Path(summary_file)
    if path.is_dir():
        path = path / "summary.json"
    if not path.exists():
        click.echo(f"{Fore.RED}Error: File '{path}' not found{Style.RESET_ALL}")
        return
    load_and_display_summary(str(path))


@cli.command('init')
@click.pass_context
def init_project(ctx):
    """Initialize project directories and a default config.yaml"""
    for dir_name in ('registry', 'results'):
        Path(dir_name).mkdir(exist_ok=True)
        log_step(logger, f"Created directory: {dir_name}/", "SUCCESS")

    config_path = Path(ctx.obj["config_path"])
    if not config_path.exists():
        RunConfig().dump_yaml(config_path)
        log_step(logger, f"Created {config_path}", "SUCCESS")
    else:
        log_step(logger, f"{config_path} already exists", "WARNING")

    if not Path('.env').exists():
        Path('.env').write_text(
            "# Default run config\nPQA_CONFIG=config.yaml\n\n"
            "# OTLP trace endpoint (optional)\n# PQA_OTLP_ENDPOINT=http://localhost:4317\n",
            encoding="utf-8",
        )
        log_step(logger, "Created .env template", "SUCCESS")

    click.echo("\nNext steps:")
    click.echo("1. python main.py generate --sizes 24,30,36 --count 30")
    click.echo("2. python main.py sweep --protocol forward --grid table2:24 --sizes 24")
    click.echo("3. python main.py view-table results/summary.json")


if __name__ == '__main__':
    cli()
