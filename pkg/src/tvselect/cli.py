"""
tvselect CLI - Thompson Variable Selection from the command line.

Subcommands:
- gen-data: write a synthetic dataset file
- run-offline / run-online: one TVS run with trajectory and summary artifacts
- regret-sim: replicated regret curves for synthetic arms
- simulate: replicated selection study over fresh datasets
- metrics: FDP, power and Hamming of a selected model; log-fit of a regret curve
- bounds: evaluate the regret bounds for given constants

Every command that writes artifacts also writes config_used.yaml, the
configuration it actually ran with.
"""

import functools
import logging
import sys
from pathlib import Path

import click
import pandas as pd
import yaml
from pydantic import ValidationError
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .application.engine import run_offline_plan, run_online_plan, summarize
from .application.factory import build_dataset, plan_run
from .application.replication import regret_experiment, simulation_study
from .application.schemas import DataSetup, RunConfig
from .config import OUTPUT_DIR_ENV, ConfigManager
from .domain.analysis import (
    bound_lemma2,
    bound_lemma3,
    bound_theorem1,
    log_fit_r2,
    regret_doubling,
    selection_metrics,
)
from .domain.models import CostParams, GOLDEN_COST, SuperArm, TVSError
from .infrastructure.datagen import SETUPS
from .infrastructure.storage import ArtifactStore, read_yaml, write_dataset

console = Console()
err_console = Console(stderr=True)

USER_ERRORS = (TVSError, ValidationError, FileNotFoundError, yaml.YAMLError)


def _one_line(error: Exception) -> str:
    if isinstance(error, ValidationError):
        problems = [
            f"{'.'.join(str(part) for part in item['loc']) or 'config'}: {item['msg']}"
            for item in error.errors()
        ]
        return "invalid configuration: " + "; ".join(problems)
    return " ".join(str(error).split())


def user_errors(command):
    """Turn parameter, structural, config and missing-file errors into exit status 2."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except USER_ERRORS as e:
            err_console.print(f"❌ [red]Error: {escape(_one_line(e))}[/red]", soft_wrap=True)
            sys.exit(2)

    return wrapper


def setup_logging(verbose: int):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def config_options(command):
    """--config, --seed and --output-dir shared by the artifact-writing commands."""
    command = click.option(
        "--output-dir",
        type=click.Path(file_okay=False),
        envvar=OUTPUT_DIR_ENV,
        help=f"Artifact directory (env {OUTPUT_DIR_ENV}; default ./tvs-output)",
    )(command)
    command = click.option("--seed", type=int, help="Master seed; overrides the config file")(command)
    command = click.option(
        "--config", "config_path", type=click.Path(dir_okay=False), help="YAML run configuration"
    )(command)
    return command


def _manager(config_path, seed, output_dir) -> ConfigManager:
    return ConfigManager(Path(config_path) if config_path else None).apply_overrides(seed, output_dir)


def _store(config: RunConfig, manager: ConfigManager) -> ArtifactStore:
    store = ArtifactStore(config.output.directory)
    manager.export_config(store.path("config_used.yaml"), config)
    return store


@click.group()
@click.version_option(version=__version__, prog_name="tvselect")
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logs on stderr")
def cli(verbose):
    """
    Thompson Variable Selection: a combinatorial Beta-Bernoulli bandit that
    picks relevant predictors by playing variable subsets.
    """
    setup_logging(verbose)


@cli.command("gen-data")
@config_options
@click.option("--setup", type=click.Choice(SETUPS), help="Synthetic setup (default from config)")
@click.option("-n", "n", type=int, help="Sample size")
@click.option("-p", "p", type=int, help="Number of predictors")
@click.option("--sigma2", type=float, help="Noise variance")
@click.option("--correlated/--independent", default=None, help="Friedman: correlated covariates")
@click.option("--num-gen-trees", type=int, help="Forest setup: trees in the mean function")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Dataset file (default <output-dir>/<setup>.csv)")
@user_errors
def gen_data(config_path, seed, output_dir, setup, n, p, sigma2, correlated, num_gen_trees, out_path):
    """Generate a synthetic regression dataset"""
    manager = _manager(config_path, seed, output_dir)
    for key, value in (
        ("setup", setup),
        ("n", n),
        ("p", p),
        ("sigma2", sigma2),
        ("correlated", correlated),
        ("num_gen_trees", num_gen_trees),
    ):
        if value is not None:
            manager.set(f"data.{key}", value)
    if manager.get("data.setup") in (DataSetup.ARMS.value, DataSetup.FILE.value):
        manager.set("data.setup", "friedman")
    config = manager.run_config()
    data = build_dataset(config)
    store = _store(config, manager)
    target = write_dataset(Path(out_path) if out_path else store.path(f"{data.setup_tag}.csv"), data)
    console.print(
        f"✅ [green]Wrote {data.setup_tag} dataset[/green] n={data.n} p={data.p} "
        f"support={list(data.true_support.members)} → {escape(str(target))}"
    )


def _run(config_path, seed, output_dir, mode: str):
    manager = _manager(config_path, seed, output_dir)
    manager.set("mode", mode)
    config = manager.run_config()
    plan = plan_run(config)
    record = run_online_plan(plan) if mode == "online" else run_offline_plan(plan)
    store = _store(config, manager)
    store.write_trajectory(record.snapshots, record.played, record.rewards)
    summary = summarize(record, config, plan.truth)
    store.write_summary(summary.model_dump(mode="json"))
    _print_summary(summary, store)


def _print_summary(summary, store: ArtifactStore):
    table = Table(show_header=False, box=box.ROUNDED)
    table.add_column("Field", style="bold")
    table.add_column("Value")
    table.add_row("Iterations", str(summary.iterations))
    table.add_row("Selected model", escape(str(summary.final_model)))
    table.add_row(
        "Converged",
        f"yes, stable from t={summary.convergence_iteration}" if summary.converged else "no",
    )
    if summary.fdp is not None:
        table.add_row("FDP / Power / Hamming", f"{summary.fdp:.3f} / {summary.power:.3f} / {summary.hamming}")
    if summary.cumulative_regret is not None:
        table.add_row("Cumulative regret", f"{summary.cumulative_regret:.4f}")
    table.add_row("Wall time", f"{summary.wall_time_seconds:.2f}s")
    console.print(Panel.fit(table, title=f"📊 TVS {summary.mode.value} run", border_style="blue"))
    console.print(f"[dim]Artifacts: {escape(str(store.base_dir))}[/dim]")


@cli.command("run-offline")
@config_options
@user_errors
def run_offline_cmd(config_path, seed, output_dir):
    """Run TVS with the full dataset at every iteration"""
    _run(config_path, seed, output_dir, "offline")


@cli.command("run-online")
@config_options
@user_errors
def run_online_cmd(config_path, seed, output_dir):
    """Run TVS over streaming mini-batches"""
    _run(config_path, seed, output_dir, "online")


@cli.command("regret-sim")
@config_options
@click.option("--replications", "-r", type=int, default=50, show_default=True)
@click.option("--workers", "-w", type=int, default=1, show_default=True)
@user_errors
def regret_sim(config_path, seed, output_dir, replications, workers):
    """Replicated cumulative regret for synthetic arms (early stopping off)"""
    manager = _manager(config_path, seed, output_dir)
    manager.set("early_stop", False)
    config = manager.run_config()
    experiment = regret_experiment(config, replications, workers)
    store = _store(config, manager)
    store.write_regret_runs(experiment.curves)

    mean = experiment.mean_curve
    horizon = mean.shape[0]
    checks = []
    for t in sorted({horizon // 8, horizon // 4, horizon // 2} - {0}):
        increment, base = regret_doubling(mean, t)
        checks.append({"t": t, "reg_t": base, "reg_2t_minus_reg_t": increment, "sublinear": increment < base})
    try:
        r2 = log_fit_r2(mean)
    except TVSError:
        r2 = None
    store.write_summary(
        {
            "replications": replications,
            "horizon": horizon,
            "optimal": list(experiment.optimal.members),
            "delta_max": experiment.delta_max,
            "final_mean_regret": float(mean[-1]) if horizon else 0.0,
            "log_fit_r2": r2,
            "doubling_checks": checks,
        },
        name="regret_summary.yaml",
    )
    console.print(
        f"✅ [green]{replications} regret curves[/green] T={horizon} "
        f"mean Reg(T)={float(mean[-1]) if horizon else 0.0:.3f} log-fit R²={r2 if r2 is None else round(r2, 4)}"
    )


@cli.command("simulate")
@config_options
@click.option("--replications", "-r", type=int, default=50, show_default=True)
@click.option("--workers", "-w", type=int, default=1, show_default=True)
@user_errors
def simulate(config_path, seed, output_dir, replications, workers):
    """Selection study: fresh dataset and TVS run per replication"""
    manager = _manager(config_path, seed, output_dir)
    config = manager.run_config()
    rows, summary = simulation_study(config, replications, workers)
    store = _store(config, manager)
    store.write_table((row.model_dump(exclude={"wall_time_seconds"}) for row in rows), "study.csv")
    store.write_summary(summary.model_dump(mode="json"), name="study_summary.yaml")

    table = Table(show_header=True, header_style="bold blue", box=box.ROUNDED)
    table.add_column("Metric")
    table.add_column("Mean", justify="right")
    table.add_column("SD", justify="right")
    for metric in ("fdp", "power", "hamming"):
        table.add_row(metric, f"{summary.mean[metric]:.3f}", f"{summary.sd[metric]:.3f}")
    console.print(table)


def _parse_indices(text: str) -> SuperArm:
    return SuperArm(tuple(int(i) for i in text.split(",") if i.strip()))


@cli.command()
@click.option("--summary", "summary_path", type=click.Path(dir_okay=False), help="summary.yaml of a run")
@click.option("--selected", help="Comma-separated selected arms")
@click.option("--truth", help="Comma-separated true support")
@click.option("-p", "p", type=int, help="Number of arms")
@click.option("--regret", "regret_path", type=click.Path(dir_okay=False), help="Regret CSV (t,reg or t,mean,se)")
@user_errors
def metrics(summary_path, selected, truth, p, regret_path):
    """Selection metrics of a model and the log-fit of a regret curve"""
    if summary_path:
        summary = read_yaml(summary_path)
        if summary.get("true_support") is None:
            raise TVSError(f"{summary_path} records no true support")
        chosen = SuperArm(tuple(summary["final_model"]))
        support = SuperArm(tuple(summary["true_support"]))
        p = summary["p"]
    elif selected is not None or truth is not None:
        if selected is None or truth is None or p is None:
            raise TVSError("--selected needs --truth and -p")
        chosen, support = _parse_indices(selected), _parse_indices(truth)
    elif not regret_path:
        raise TVSError("Give --summary, or --selected with --truth and -p, or --regret")
    else:
        chosen = None

    if chosen is not None:
        result = selection_metrics(chosen, support, p)
        console.print(f"FDP:     {result.fdp:.4f}")
        console.print(f"Power:   {result.power:.4f}")
        console.print(f"Hamming: {result.hamming}")

    if regret_path:
        if not Path(regret_path).exists():
            raise FileNotFoundError(f"Regret file not found: {regret_path}")
        frame = pd.read_csv(regret_path)
        column = "reg" if "reg" in frame.columns else "mean"
        console.print(f"Log-fit R²: {log_fit_r2(frame[column].to_numpy()):.4f}")


@cli.group()
def bounds():
    """Evaluate the regret bounds (constants must be supplied)"""
    pass


@bounds.command("theorem1")
@click.option("--alpha", type=float, required=True, help="Identifiability margin in (0, 1/2)")
@click.option("-p", "p", type=int, required=True)
@click.option("--q-star", type=int, required=True)
@click.option("--horizon", "-T", type=float, required=True)
@click.option("--delta-max", type=float, required=True)
@click.option("--c1", type=float, default=1.0, show_default=True)
@click.option("--c2", type=float, default=1.0, show_default=True)
@user_errors
def bounds_theorem1(alpha, p, q_star, horizon, delta_max, c1, c2):
    """Bound for strongly identifiable set-dependent arms"""
    click.echo(repr(bound_theorem1(alpha, p, q_star, horizon, delta_max, c1, c2)))


def _read_gaps(path: str):
    if not Path(path).exists():
        raise FileNotFoundError(f"Gaps file not found: {path}")
    return read_yaml(path)


@bounds.command("lemma2")
@click.option("--gaps", "gaps_path", type=click.Path(dir_okay=False), required=True, help="YAML mapping arm -> gap")
@click.option("--horizon", "-T", type=float, required=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--const-c", type=float, default=1.0, show_default=True)
@click.option("-p", "p", type=int, required=True)
@user_errors
def bounds_lemma2(gaps_path, horizon, epsilon, const_c, p):
    """Bound for the size-constrained oracle with known q*"""
    gaps = {int(k): float(v) for k, v in _read_gaps(gaps_path).items()}
    click.echo(repr(bound_lemma2(gaps, horizon, epsilon, const_c, p)))


@bounds.command("lemma3")
@click.option(
    "--gaps", "gaps_path", type=click.Path(dir_okay=False), required=True,
    help="YAML list of {members: [...], gap: x}",
)
@click.option("--q-star", type=int, required=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--cost", type=float, default=GOLDEN_COST, show_default=True)
@click.option("--const-c", type=float, default=1.0, show_default=True)
@click.option("--horizon", "-T", type=float, required=True)
@click.option("--delta-max", type=float, required=True)
@click.option("-p", "p", type=int, required=True)
@user_errors
def bounds_lemma3(gaps_path, q_star, epsilon, cost, const_c, horizon, delta_max, p):
    """Bound for independent arms with unknown q*"""
    entries = _read_gaps(gaps_path)
    if not isinstance(entries, list):
        raise TVSError(f"{gaps_path}: expected a list of {{members, gap}} entries")
    gaps = {SuperArm(tuple(e["members"])): float(e["gap"]) for e in entries}
    click.echo(repr(bound_lemma3(gaps, q_star, epsilon, CostParams(cost), const_c, horizon, delta_max, p)))


def main():
    """Entry point for the CLI"""
    try:
        cli()
    except KeyboardInterrupt:
        err_console.print("\n👋 [yellow]Interrupted[/yellow]")
        sys.exit(130)
    except Exception as e:
        err_console.print(f"❌ [red]Error: {escape(str(e))}[/red]")
        sys.exit(1)


if __name__ == "__main__":
    main()
