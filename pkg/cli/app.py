"""
Main CLI application for FairForge.

This module contains the Typer application exposing the pipeline:
evaluate prediction logs, search per-race thresholds, prune models,
sweep pruning rates, synthesize cohorts and render saved reports.

Exit codes: 0 success, 2 data/validation error, 64 usage error.
Rendered reports go to stdout (or --out); logs and tables go to stderr.
"""
import json
import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional

import typer

try:  # typer >= 0.26 vendors click; its exceptions live here
    from typer._click import exceptions as click
except ImportError:
    import click

from core.config import Config
from core.errors import FairForgeError
from core.formats import load_model, load_sample_set, mask_path_for, save_mask, save_model
from core.metrics import evaluate
from core.pruner_manager import get_pruner_manager
from core.pruning import apply_pruning, prune_sweep, select_optimal_rate
from core.records import dump_records, parse_records
from core.report import make_bundle, merge_bundles, parse_bundle, render as render_bundle, render_sweep
from core.synth import generate, read_spec, spec_thresholds
from core.thresholds import (
    accuracy_at, evaluate_with_plan, load_plan, plan_thresholds, save_plan, score_histogram,
)
from core.utils import write_output
from models import ThresholdPlan

from .tables import (
    display_error_message, display_methods_table, display_prune_summary,
    display_settings_table, display_sweep_optima, display_threshold_summary,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 2
EXIT_USAGE_ERROR = 64


class OutputFormat(str, Enum):
    markdown = "markdown"
    json = "json"
    csv = "csv"


app = typer.Typer(
    name="fairforge",
    help="Fairness evaluation and bias-aware pruning for forgery detectors.",
    add_completion=False,
    no_args_is_help=True,
)


@app.callback()
def configure(ctx: typer.Context,
              config_path: Optional[Path] = typer.Option(None, "--config", help="Path to settings.yaml")):
    """Load settings shared by every subcommand."""
    ctx.obj = Config(str(config_path) if config_path else None)


def _config(ctx: typer.Context) -> Config:
    return ctx.obj if isinstance(ctx.obj, Config) else Config()


def _format(ctx: typer.Context, fmt: Optional[OutputFormat]) -> str:
    return fmt.value if fmt is not None else _config(ctx).default_format


def _emit(text: str, out: Optional[Path]):
    """Write to --out, or to stdout."""
    if write_output(text, out) is None:
        typer.echo(text, nl=False)


def _parse_methods(value: str) -> List[str]:
    methods = [m.strip().lower() for m in value.split(",") if m.strip()]
    if not methods:
        raise typer.BadParameter("at least one pruning method is required", param_hint="--methods")
    available = get_pruner_manager().list_methods()
    unknown = [m for m in methods if m not in available]
    if unknown:
        raise typer.BadParameter(f"unknown method(s) {unknown}; available: {', '.join(available)}",
                                 param_hint="--methods")
    return methods


def _parse_rates(value: str) -> List[float]:
    try:
        rates = [float(r) for r in value.split(",") if r.strip()]
    except ValueError:
        raise typer.BadParameter(f"rates must be comma-separated numbers, got '{value}'", param_hint="--rates")
    if not rates:
        raise typer.BadParameter("at least one rate is required", param_hint="--rates")
    for rate in rates:
        _check_rate(rate, "--rates")
    return rates


def _check_rate(rate: float, hint: str):
    if not 0.0 <= rate < 1.0:
        raise typer.BadParameter(f"rate {rate} outside [0, 1)", param_hint=hint)


@app.command("eval")
def cmd_eval(
    ctx: typer.Context,
    records: Path = typer.Argument(..., help="Prediction log (JSONL)"),
    threshold: Optional[float] = typer.Option(None, "--threshold", min=0.0, max=1.0, help="Global threshold"),
    thresholds: Optional[Path] = typer.Option(None, "--thresholds", help="Per-race threshold plan (JSON)"),
    fmt: Optional[OutputFormat] = typer.Option(None, "--format", help="Output format"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the report here instead of stdout"),
    name: Optional[str] = typer.Option(None, "--name", help="Run name (default: file stem)"),
    skip_missing: Optional[bool] = typer.Option(None, "--skip-missing/--no-skip-missing",
                                                help="Drop races with empty cells instead of failing"),
    breakdown: bool = typer.Option(False, "--breakdown", help="Append per-race tables (markdown)"),
):
    """Compute the 12 fairness metrics plus AUC/ACC for a prediction log."""
    if threshold is not None and thresholds is not None:
        raise typer.BadParameter("--threshold and --thresholds are mutually exclusive")
    config = _config(ctx)
    skip = config.skip_missing if skip_missing is None else skip_missing

    with open(records, "r", encoding="utf-8") as f:
        cohort = parse_records(f)

    if thresholds is not None:
        report = evaluate_with_plan(cohort, load_plan(thresholds), skip_missing=skip)
    else:
        report = evaluate(cohort, config.threshold if threshold is None else threshold, skip_missing=skip)

    bundle = make_bundle({name or records.stem: report})
    _emit(render_bundle(bundle, _format(ctx, fmt), config.decimals, breakdown), out)


@app.command("thresholds")
def cmd_thresholds(
    ctx: typer.Context,
    records: Path = typer.Argument(..., help="Prediction log (JSONL)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the plan JSON here instead of stdout"),
    bins: Optional[int] = typer.Option(None, "--bins", min=1, help="Score histogram bins"),
):
    """Search the accuracy-maximizing threshold of every race."""
    config = _config(ctx)
    with open(records, "r", encoding="utf-8") as f:
        cohort = parse_records(f)

    plan = plan_thresholds(cohort, max_workers=config.threads)
    default_accuracy = {
        race: accuracy_at([r.score for r in cohort.for_race(race)], [r.label for r in cohort.for_race(race)],
                          config.threshold)
        for race in cohort.races
    }
    histogram = score_histogram(cohort, bins or config.histogram_bins)
    display_threshold_summary(plan, default_accuracy, histogram, config.threshold)

    if out is not None:
        save_plan(plan, out)
    else:
        typer.echo(json.dumps(plan.to_dict(), indent=2))


@app.command("prune")
def cmd_prune(
    ctx: typer.Context,
    model_path: Path = typer.Argument(..., metavar="MODEL", help="FTM model file"),
    calib: Optional[Path] = typer.Argument(None, metavar="[CALIB_DIR]", help="Calibration sample set directory"),
    method: str = typer.Option("bpfa", "--method", help="Pruning method (bpfa, weig, roba)"),
    rate: float = typer.Option(..., "--rate", help="Per-layer pruning rate in [0, 1)"),
    out: Path = typer.Option(..., "--out", help="Pruned FTM output; the mask goes to <out>.mask"),
    include_linear: Optional[bool] = typer.Option(None, "--include-linear/--conv-only",
                                                  help="Also prune linear layers"),
    post_activation: Optional[bool] = typer.Option(None, "--post-activation/--pre-activation",
                                                   help="Tap activations after the following nonlinearity"),
):
    """Prune one model at one rate and write the model plus its mask sidecar."""
    _check_rate(rate, "--rate")
    method = _parse_methods(method)[0]
    config = _config(ctx)

    model = load_model(model_path)
    calibration = load_sample_set(calib) if calib is not None else None
    pruned, mask, _ = apply_pruning(
        model, calibration, method, rate,
        include_linear=config.include_linear if include_linear is None else include_linear,
        post_activation=config.post_activation if post_activation is None else post_activation,
        max_workers=config.threads,
    )

    save_model(pruned, out)
    save_mask(mask, mask_path_for(out))
    display_prune_summary(model, mask)


@app.command("sweep")
def cmd_sweep(
    ctx: typer.Context,
    model_path: Path = typer.Argument(..., metavar="MODEL", help="FTM model file"),
    calib: Path = typer.Argument(..., metavar="CALIB_DIR", help="Calibration sample set directory"),
    eval_dir: Path = typer.Argument(..., metavar="EVAL_DIR", help="Labelled evaluation sample set directory"),
    methods: Optional[str] = typer.Option(None, "--methods", help="Comma-separated methods"),
    rates: Optional[str] = typer.Option(None, "--rates", help="Comma-separated rates"),
    threshold: Optional[float] = typer.Option(None, "--threshold", min=0.0, max=1.0),
    fmt: OutputFormat = typer.Option(OutputFormat.csv, "--format", help="Output format"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the grid here instead of stdout"),
    include_linear: Optional[bool] = typer.Option(None, "--include-linear/--conv-only"),
    skip_missing: Optional[bool] = typer.Option(None, "--skip-missing/--no-skip-missing"),
):
    """Evaluate fairness of the model pruned at every (method, rate)."""
    config = _config(ctx)
    method_list = _parse_methods(methods) if methods is not None else _parse_methods(",".join(config.methods))
    rate_list = _parse_rates(rates) if rates is not None else config.default_rates
    for rate in rate_list:
        _check_rate(rate, "pruning.default_rates")

    grid = prune_sweep(
        load_model(model_path), load_sample_set(calib), method_list, rate_list, load_sample_set(eval_dir),
        threshold=config.threshold if threshold is None else threshold,
        include_linear=config.include_linear if include_linear is None else include_linear,
        post_activation=config.post_activation,
        skip_missing=config.skip_missing if skip_missing is None else skip_missing,
        max_workers=config.threads,
    )

    display_sweep_optima({m: select_optimal_rate(grid, m) for m in method_list})
    _emit(render_sweep(grid, fmt.value, config.decimals), out)


@app.command("synth")
def cmd_synth(
    ctx: typer.Context,
    spec: Path = typer.Argument(..., help="Synthetic cohort spec (JSON)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write records here instead of stdout"),
    variant: Optional[str] = typer.Option(None, "--variant", help="Variant of a multi-variant spec"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the spec's seed"),
    plan_out: Optional[Path] = typer.Option(None, "--plan-out", help="Write the variant's thresholds as a plan"),
):
    """Generate a synthetic prediction log from a spec file."""
    resolved = read_spec(spec, variant)
    # specs without a seed fall back to runtime.seed
    resolved.setdefault("seed", _config(ctx).seed)
    cohort = generate(resolved, seed)
    _emit(dump_records(cohort), out)

    if plan_out is not None:
        thresholds = spec_thresholds(resolved)
        if thresholds is None:
            raise FairForgeError(f"{spec}: variant '{resolved.get('name')}' carries no thresholds")
        save_plan(ThresholdPlan(per_race=thresholds), plan_out)


@app.command("render")
def cmd_render(
    ctx: typer.Context,
    bundles: List[Path] = typer.Argument(..., help="Saved JSON report bundles"),
    fmt: Optional[OutputFormat] = typer.Option(None, "--format", help="Output format"),
    out: Optional[Path] = typer.Option(None, "--out"),
    breakdown: bool = typer.Option(False, "--breakdown", help="Append per-race tables (markdown)"),
):
    """Merge saved JSON reports and render them with rankings."""
    merged = merge_bundles(parse_bundle(path.read_text(encoding="utf-8")) for path in bundles)
    _emit(render_bundle(merged, _format(ctx, fmt), _config(ctx).decimals, breakdown), out)


@app.command("methods")
def cmd_methods():
    """List the discovered pruning methods."""
    manager = get_pruner_manager()
    display_methods_table([manager.get_pruner_info(m) for m in manager.list_methods()])


@app.command("settings")
def cmd_settings(ctx: typer.Context):
    """Show the effective settings."""
    display_settings_table(_config(ctx))


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI and map failures to exit codes.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        0 on success, 2 for data/validation errors, 64 for usage errors
    """
    try:
        result = app(args=argv, prog_name="fairforge", standalone_mode=False)
    except click.UsageError as e:
        logger.error(f"Usage error: {e.format_message()}")
        typer.echo(f"Usage error: {e.format_message()}", err=True)
        return EXIT_USAGE_ERROR
    except (FairForgeError, OSError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        display_error_message(str(e))
        return EXIT_DATA_ERROR
    except click.Abort:
        typer.echo("Aborted.", err=True)
        return 1

    return result if isinstance(result, int) else EXIT_OK
