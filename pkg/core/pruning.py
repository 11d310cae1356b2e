"""
Fairness-aware weight pruning for FairForge.

Unstructured, per-layer pruning of conv2d and linear weights:

1. activation_bias measures, on a race-labelled calibration set, how
   much each output unit's activation norm varies across races.
2. A pruner (see pruners/) turns weights and that bias into scores.
3. apply_pruning zeroes the floor(rate * numel) lowest-scoring weights of
   every prunable layer. Scores are computed once, on the unpruned model.

prune_sweep repeats this over methods and rates and evaluates every
pruned model's fairness on a labelled evaluation set.
"""
import logging
import math
from decimal import Decimal
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.engine import forward_with_taps
from core.errors import DegenerateCohort, DegenerateUtility, PruningError
from core.metrics import auc, evaluate
from core.pruner_manager import get_pruner_manager
from core.utils import parallel_map
from models import (
    BiasProfile, Cohort, LayerBias, Model, PredictionRecord, PruneMask,
    SampleSet, SweepGrid, SweepRow,
)

logger = logging.getLogger(__name__)

BASELINE_METHOD = "original"
UNUSABLE_AUC_TOLERANCE = 1e-9


def unit_norms(tap: np.ndarray) -> np.ndarray:
    """
    Per-output-unit activation magnitude of one tapped tensor.

    Conv outputs (C, H, W) give the L2 norm over spatial positions of each
    channel; linear outputs (N,) give |activation|.
    """
    tap = np.asarray(tap, dtype=np.float64)
    if tap.ndim == 1:
        return np.abs(tap)
    return np.linalg.norm(tap.reshape(tap.shape[0], -1), axis=1)


def activation_bias(model: Model, calibration: SampleSet, layers: Optional[Sequence[int]] = None,
                    include_linear: bool = True, post_activation: bool = False,
                    races: Optional[Sequence[str]] = None, max_workers: int = 1) -> BiasProfile:
    """
    Measure the racial activation bias of every prunable unit.

    For each layer, Z[s, i] is the mean over race s's samples of unit i's
    activation norm, and bias[i] is the population std of Z[:, i] across
    races.

    Args:
        model: Model to measure
        calibration: Race-labelled input tensors
        layers: Layer indices to tap (default: all prunable layers)
        include_linear: Tap linear layers as well as conv layers
        post_activation: Tap after the following nonlinearity
        races: Expected races; a race without samples is an error
        max_workers: Samples run in parallel

    Returns:
        BiasProfile with Z rows in calibration race order

    Raises:
        PruningError: No prunable layers, fewer than 2 races, or a race
            with zero samples
    """
    if layers is None:
        layers = model.prunable_indices(include_linear)
    layers = list(layers)
    if not layers:
        raise PruningError(f"model '{model.name}' has no prunable layers")
    if len(calibration) == 0:
        raise PruningError("calibration set is empty")

    profile_races = tuple(races) if races is not None else calibration.races
    counts = {race: len(calibration.for_race(race)) for race in profile_races}
    empty = [race for race, count in counts.items() if count == 0]
    if empty:
        raise PruningError(f"no calibration samples for race(s): {', '.join(empty)}")
    if len(profile_races) < 2:
        raise PruningError(f"activation bias needs at least 2 races, got {list(profile_races)}")

    def sample_norms(sample):
        _, taps = forward_with_taps(model, sample.tensor, layers, post_activation=post_activation)
        return {index: unit_norms(taps[index]) for index in layers}

    samples = [s for s in calibration.samples if s.race in counts]
    norms = parallel_map(sample_norms, samples, max_workers=max_workers)

    profile_layers: Dict[int, LayerBias] = {}
    for index in layers:
        z = np.stack([
            np.mean(np.stack([n[index] for s, n in zip(samples, norms) if s.race == race]), axis=0)
            for race in profile_races
        ])
        profile_layers[index] = LayerBias(z=z, bias=np.std(z, axis=0))

    logger.info(f"Measured activation bias on {len(samples)} samples, {len(profile_races)} races, {len(layers)} layers")
    return BiasProfile(races=profile_races, layers=profile_layers, sample_counts=counts)


def pruning_scores(weight: np.ndarray, bias: Optional[np.ndarray], method: str) -> np.ndarray:
    """
    Score every weight of a layer with a registered pruner.

    Args:
        weight: Layer weight tensor
        bias: Per-unit activation bias (ignored by methods without calibration)
        method: Pruner method ID ("bpfa", "weig", "roba")

    Returns:
        float64 scores congruent with weight; lowest are pruned first
    """
    return get_pruner_manager().get_pruner(method).score(weight, bias)


def pruned_count(rate: float, numel: int) -> int:
    """floor(rate * numel) on the decimal value of rate: 0.29 of 100 weights is 29."""
    return math.floor(Decimal(repr(float(rate))) * int(numel))


def layer_mask(weight: np.ndarray, scores: np.ndarray, rate: float) -> np.ndarray:
    """
    Boolean mask of the floor(rate * numel) lowest-scoring weights.

    Ties are broken by ascending |W|, then ascending flattened index.
    """
    numel = weight.size
    k = pruned_count(rate, numel)
    mask = np.zeros(numel, dtype=bool)
    if k > 0:
        order = np.lexsort((np.arange(numel), np.abs(weight).reshape(-1), scores.reshape(-1)))
        mask[order[:k]] = True
    return mask.reshape(weight.shape)


def _check_rate(rate: float):
    if not (0.0 <= rate < 1.0):
        raise PruningError(f"pruning rate must be in [0, 1), got {rate}")


def apply_pruning(model: Model, calibration: Optional[SampleSet], method: str, rate: float,
                  include_linear: bool = True, post_activation: bool = False,
                  profile: Optional[BiasProfile] = None,
                  max_workers: int = 1) -> Tuple[Model, PruneMask, Optional[BiasProfile]]:
    """
    Prune a model with one method at one per-layer rate.

    Args:
        model: Unpruned model
        calibration: Race-labelled inputs (not needed for WEIG)
        method: Pruner method ID
        rate: Fraction of each prunable layer's weights to zero, in [0, 1)
        include_linear: Prune linear layers as well as conv layers
        post_activation: Tap after the following nonlinearity
        profile: Precomputed bias profile to reuse
        max_workers: Calibration samples run in parallel

    Returns:
        (pruned model, mask, bias profile or None when the method ignores
        calibration and none was given)

    Raises:
        PruningError: Invalid rate, unknown method or missing calibration
    """
    _check_rate(rate)
    pruner = get_pruner_manager().get_pruner(method)
    layers = model.prunable_indices(include_linear)
    if not layers:
        raise PruningError(f"model '{model.name}' has no prunable layers")

    if pruner.needs_calibration and profile is None:
        if calibration is None:
            raise PruningError(f"{pruner.method_name} needs a calibration set")
        profile = activation_bias(model, calibration, layers, post_activation=post_activation,
                                  max_workers=max_workers)

    mask = PruneMask(method=pruner.method_id, rate=rate)
    weights = {}
    for index in layers:
        weight = model.layers[index].weight
        bias = profile.bias_for(index) if (pruner.needs_calibration and profile is not None) else None
        if pruner.needs_calibration and bias is None:
            raise PruningError(f"bias profile has no entry for layer {index}")
        layer_bits = layer_mask(weight, pruner.score(weight, bias), rate)
        mask.layers[index] = layer_bits
        weights[index] = np.where(layer_bits, weight.dtype.type(0), weight)
        logger.info(f"Layer {index} ({model.layers[index]}): pruned {int(layer_bits.sum())}/{weight.size} weights")

    return model.with_weights(weights), mask, profile


def score_samples(model: Model, samples: SampleSet, max_workers: int = 1) -> Cohort:
    """
    Run a model over a labelled sample set and build its prediction log.

    Raises:
        PruningError: If some sample has no approach or label
    """
    if not samples.labelled:
        raise PruningError("evaluation samples need both 'approach' and 'label'")

    def predict(sample):
        score, _ = forward_with_taps(model, sample.tensor)
        return score

    scores = parallel_map(predict, samples.samples, max_workers=max_workers)
    return Cohort.from_records(
        PredictionRecord(id=s.id, score=min(max(score, 0.0), 1.0), label=s.label, race=s.race, approach=s.approach)
        for s, score in zip(samples.samples, scores)
    )


def _sweep_row(method: str, rate: float, cohort: Cohort, threshold: float, skip_missing: bool,
               pruned: Optional[Dict[int, int]] = None) -> SweepRow:
    """Evaluate one pruned model's predictions; failures mark the row unusable."""
    scores = np.array([r.score for r in cohort.records])
    labels = np.array([r.label for r in cohort.records])
    acc = float(np.mean((scores >= threshold).astype(int) == labels))
    row_auc = auc(cohort)

    report = None
    usable = abs(row_auc - 0.5) > UNUSABLE_AUC_TOLERANCE
    try:
        report = evaluate(cohort, threshold, skip_missing=skip_missing)
    except (DegenerateCohort, DegenerateUtility) as e:
        logger.warning(f"{method}@{rate:g}: metrics undefined ({e})")
        usable = False
    if not usable:
        logger.warning(f"{method}@{rate:g}: model unusable (AUC {row_auc:.4f})")
    return SweepRow(method=method, rate=rate, auc=row_auc, acc=acc, usable=usable,
                    report=report, pruned=dict(pruned or {}))


def prune_sweep(model: Model, calibration: Optional[SampleSet], methods: Iterable[str], rates: Iterable[float],
                eval_samples: SampleSet, threshold: float = 0.5, include_linear: bool = True,
                post_activation: bool = False, skip_missing: bool = False, max_workers: int = 1) -> SweepGrid:
    """
    Evaluate fairness and utility of a model pruned at every (method, rate).

    The bias profile is measured once on the unpruned model and shared by
    all calibrated methods. Rows come out method-major in the given
    order, then by the given rate order.

    Args:
        model: Unpruned model
        calibration: Race-labelled inputs for the bias profile
        methods: Pruner method IDs
        rates: Per-layer pruning rates, each in [0, 1)
        eval_samples: Labelled evaluation inputs
        threshold: Decision threshold for the fairness metrics

    Returns:
        SweepGrid with the unpruned baseline and |methods| x |rates| rows
    """
    methods = [m.lower() for m in methods]
    rates = [float(r) for r in rates]
    if not methods:
        raise PruningError("no pruning methods given")
    if not rates:
        raise PruningError("no pruning rates given")
    for rate in rates:
        _check_rate(rate)

    manager = get_pruner_manager()
    pruners = [manager.get_pruner(m) for m in methods]

    profile = None
    if any(p.needs_calibration for p in pruners):
        if calibration is None:
            raise PruningError("calibrated methods need a calibration set")
        profile = activation_bias(model, calibration, include_linear=include_linear,
                                  post_activation=post_activation, max_workers=max_workers)

    baseline = _sweep_row(BASELINE_METHOD, 0.0, score_samples(model, eval_samples, max_workers),
                          threshold, skip_missing)

    rows: List[SweepRow] = []
    for pruner in pruners:
        for rate in rates:
            pruned_model, mask, _ = apply_pruning(model, calibration, pruner.method_id, rate,
                                                  include_linear=include_linear, profile=profile)
            cohort = score_samples(pruned_model, eval_samples, max_workers)
            rows.append(_sweep_row(pruner.method_id, rate, cohort, threshold, skip_missing, mask.pruned_counts()))
            logger.info(f"Sweep {rows[-1]}")

    return SweepGrid(baseline=baseline, rows=rows)


def select_optimal_rate(grid: SweepGrid, method: str) -> Optional[SweepRow]:
    """
    Pick the fairest usable rate for a method.

    Lowest mean of the 12 fairness metrics wins; ties go to the higher
    AUC, then to the smaller rate. Returns None if no row is usable.
    """
    candidates = [row for row in grid.rows_for(method.lower()) if row.usable and row.report is not None]
    if not candidates:
        return None
    return min(candidates, key=lambda row: (row.fairness_mean, -row.auc, row.rate))
