"""
Table formatting for FairForge CLI.

This module handles the Rich tables shown alongside command output:
pruned weight counts, threshold search summaries, sweep optima, pruning
methods and settings. Everything here prints to stderr so stdout carries
only rendered reports.
"""
from typing import Dict, List, Optional, TYPE_CHECKING

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from models import Model, PruneMask, SweepRow, ThresholdPlan

if TYPE_CHECKING:
    from core.config import Config

console = Console(stderr=True)


def display_prune_summary(model: Model, mask: PruneMask) -> None:
    """
    Display per-layer pruned weight counts.

    Args:
        model: The unpruned model
        mask: Mask returned by apply_pruning
    """
    table = Table(title=f"{mask.method.upper()} @ rate {mask.rate:g}", show_header=True, header_style="bold magenta")
    table.add_column("Layer", style="cyan", justify="center")
    table.add_column("Kind", style="white")
    table.add_column("Weights", justify="right")
    table.add_column("Pruned", style="green", justify="right")
    table.add_column("Share", style="dim", justify="right")

    total = 0
    for index, pruned in mask.pruned_counts().items():
        numel = model.layers[index].weight.size
        total += numel
        table.add_row(str(index), str(model.layers[index]), str(numel), str(pruned), f"{pruned / numel:.2%}")
    table.add_row("", "[bold]total[/bold]", str(total), str(mask.total_pruned), "")

    panel = Panel(
        table,
        title=f"[bold blue]Pruned {model.name}[/bold blue]",
        border_style="blue",
        padding=(0, 1)
    )
    console.print(panel)


def display_threshold_summary(plan: ThresholdPlan, default_accuracy: Dict[str, float],
                              histogram: Optional[Dict[str, np.ndarray]] = None,
                              default_threshold: float = 0.5) -> None:
    """
    Display per-race optimal thresholds next to the default-threshold accuracy.

    Args:
        plan: Result of plan_thresholds
        default_accuracy: race -> accuracy at the default threshold
        histogram: race -> score bin counts, shown as a sparkline
        default_threshold: The threshold default_accuracy was measured at
    """
    table = Table(title="Per-race thresholds", show_header=True, header_style="bold magenta")
    table.add_column("Race", style="cyan")
    table.add_column("Best threshold", justify="right")
    table.add_column(f"ACC @ {default_threshold:g}", justify="right")
    table.add_column("ACC @ best", style="green", justify="right")
    if histogram:
        table.add_column("Scores", style="dim")

    for race, threshold in plan.per_race.items():
        trace = dict(plan.search_trace.get(race, []))
        row = [race, f"{threshold:.4f}", f"{default_accuracy[race]:.4f}", f"{trace.get(threshold, float('nan')):.4f}"]
        if histogram:
            row.append(_sparkline(histogram[race]))
        table.add_row(*row)

    console.print(table)


def _sparkline(counts: np.ndarray) -> str:
    bars = " ▁▂▃▄▅▆▇█"
    peak = counts.max() if len(counts) else 0
    if peak == 0:
        return " " * len(counts)
    return "".join(bars[int(round(c / peak * (len(bars) - 1)))] for c in counts)


def display_sweep_optima(optima: Dict[str, Optional[SweepRow]]) -> None:
    """
    Display the fairest usable rate of each method.

    Args:
        optima: method -> row chosen by select_optimal_rate (None if no
            usable row)
    """
    table = Table(title="Optimal pruning rates", show_header=True, header_style="bold magenta")
    table.add_column("Method", style="cyan")
    table.add_column("Rate", justify="right")
    table.add_column("Fairness mean", style="green", justify="right")
    table.add_column("AUC", justify="right")

    for method, row in optima.items():
        if row is None:
            table.add_row(method.upper(), "-", "-", "-")
        else:
            table.add_row(method.upper(), f"{row.rate:g}", f"{row.fairness_mean:.4f}", f"{row.auc:.4f}")
    console.print(table)


def display_methods_table(methods: List[Dict]) -> None:
    """
    Display the discovered pruning methods.

    Args:
        methods: get_pruner_info() dictionaries
    """
    table = Table(title="Pruning methods", show_header=True, header_style="bold magenta")
    table.add_column("ID", style="cyan")
    table.add_column("Name", style="white")
    table.add_column("Calibration", justify="center")
    table.add_column("Description", style="dim")

    for info in methods:
        table.add_row(info['id'], info['name'], "yes" if info['needs_calibration'] else "no", info['description'])
    console.print(table)


def display_settings_table(config: 'Config') -> None:
    """
    Display current settings in a table format.

    Args:
        config: Configuration object to display
    """
    table = Table(title="Current Settings", show_header=True, header_style="bold magenta")
    table.add_column("Setting", style="cyan", width=25)
    table.add_column("Value", style="white", width=20)
    table.add_column("Description", style="dim", width=30)

    table.add_row("Threshold", f"{config.threshold:g}", "Default decision threshold")
    table.add_row("Skip Missing", "Yes" if config.skip_missing else "No", "Drop races with empty cells")
    table.add_row("Methods", ", ".join(config.methods), "Methods swept by default")
    table.add_row("Rates", ", ".join(f"{r:g}" for r in config.default_rates), "Rates swept by default")
    table.add_row("Include Linear", "Yes" if config.include_linear else "No", "Prune linear layers too")
    table.add_row("Threads", str(config.threads), "Worker threads (FFB_THREADS caps)")
    table.add_row("Default Format", config.default_format, "Report format")

    panel = Panel(
        table,
        title="[bold blue]Settings[/bold blue]",
        border_style="blue",
        padding=(0, 1)
    )
    console.print(panel)


def display_error_message(message: str) -> None:
    """
    Display an error message in a highlighted box.

    Args:
        message: Error message to display
    """
    panel = Panel(
        f"[red]✗ {message}[/red]",
        style="red",
        padding=(0, 1)
    )
    console.print(panel)
