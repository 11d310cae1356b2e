"""
Synthetic cohort generators for FairForge.

Generators build prediction logs with exactly known per-cell accuracies,
so metric values can be checked against hand arithmetic:

- from_accuracy_spec: target accuracy per (race, approach) cell
- bias_offset_cohort: two fake approaches biased in opposite directions
- aggregation_distortion_cohort: equal race gaps on a weak and a strong approach

Scores are bimodal (0.9 for "predicted fake", 0.1 for "predicted real"),
so thresholding at 0.5 hits every target up to 1/n granularity. The noise
flag jitters scores by less than 0.4 while keeping them on the same side
of 0.5.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from core.errors import SpecError
from models import AccuracySpec, Cohort, PredictionRecord, REAL_FACE

logger = logging.getLogger(__name__)

HIGH_SCORE = 0.9
LOW_SCORE = 0.1
DEFAULT_RACES = ("Caucasian", "Asian")
GENERATORS = ("accuracy", "bias_offset", "aggregation_distortion")


def _check_accuracy(value: float, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SpecError(f"{where}: accuracy must be a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise SpecError(f"{where}: accuracy {value} outside [0, 1]")
    return float(value)


def _cell_scores(correct: np.ndarray, label: int, rng: np.random.Generator, noise: bool) -> np.ndarray:
    """Scores for one cell given which records are classified correctly."""
    predicted_fake = correct if label == 1 else ~correct
    scores = np.where(predicted_fake, HIGH_SCORE, LOW_SCORE)
    if noise:
        high_jitter = rng.uniform(-0.39, 0.09, size=len(scores))
        low_jitter = rng.uniform(-0.09, 0.39, size=len(scores))
        scores = np.where(predicted_fake, scores + high_jitter, scores + low_jitter)
    return scores


def from_accuracy_spec(spec: AccuracySpec) -> Cohort:
    """
    Build a cohort whose threshold-0.5 cell accuracies match a spec.

    Each cell holds n_per_cell records of which floor(acc * n + 0.5) are
    classified correctly. Record order within a cell is shuffled with a
    per-cell generator seeded by (seed, cell index), so the output is
    identical for identical specs.

    Raises:
        SpecError: For accuracies outside [0, 1] or n_per_cell < 1
    """
    n = spec.n_per_cell
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SpecError(f"n_per_cell must be a positive integer, got {n!r}")
    if not spec.accuracy:
        raise SpecError("spec has no cells")

    records: List[PredictionRecord] = []
    for cell_index, (approach, race, acc) in enumerate(spec.cells()):
        acc = _check_accuracy(acc, f"cell ({race}, {approach})")
        label = 0 if approach == REAL_FACE else 1
        n_correct = math.floor(acc * n + 0.5)

        rng = np.random.default_rng([spec.seed, cell_index])
        correct = np.zeros(n, dtype=bool)
        correct[:n_correct] = True
        correct = rng.permutation(correct)
        scores = _cell_scores(correct, label, rng, spec.noise)

        records.extend(
            PredictionRecord(id=f"{approach}-{race}-{k:05d}", score=float(score), label=label,
                             race=race, approach=approach)
            for k, score in enumerate(scores)
        )

    cohort = Cohort.from_records(records)
    logger.info(f"Generated '{spec.name}': {len(cohort)} records, {len(cohort.races)} races, "
                f"{len(cohort.approaches)} approaches")
    return cohort


def _check_offset(center: float, gap: float, what: str):
    if gap < 0:
        raise SpecError(f"gap must be >= 0, got {gap}")
    low, high = center - gap / 2, center + gap / 2
    if low < 0.0 or high > 1.0:
        raise SpecError(f"{what} {center} +/- {gap / 2} leaves [0, 1]")


def bias_offset_cohort(gap: float, base: float = 0.6, n: int = 1000,
                       races: Sequence[str] = DEFAULT_RACES, seed: int = 0) -> Cohort:
    """
    Two races, two fake approaches with opposite per-race biases.

    FA1 is more accurate on the first race (base + gap/2 vs base - gap/2),
    FA2 on the second; RealFace sits at base for both. Each fake approach
    has a race gap of `gap`, yet pooled per-race accuracies are equal, so
    naive metrics see no bias at all.

    Raises:
        SpecError: If base +/- gap/2 leaves [0, 1] or races are not two
    """
    if len(races) != 2:
        raise SpecError(f"bias offset cohort needs exactly 2 races, got {list(races)}")
    _check_offset(base, gap, "base")
    first, second = races
    accuracy = {
        REAL_FACE: {first: base, second: base},
        "FA1": {first: base + gap / 2, second: base - gap / 2},
        "FA2": {first: base - gap / 2, second: base + gap / 2},
    }
    return from_accuracy_spec(AccuracySpec(accuracy=accuracy, n_per_cell=n, seed=seed, name="bias_offset"))


def aggregation_distortion_cohort(acc_low: float, acc_high: float, gap: float, n: int = 1000,
                                  real_acc: float = 1.0, races: Sequence[str] = DEFAULT_RACES,
                                  seed: int = 0) -> Cohort:
    """
    A weak and a strong fake approach with the same race gap.

    ApproachLow has mean accuracy acc_low, ApproachHigh acc_high; on both,
    the first race is gap/2 above the mean and the second gap/2 below.
    RealFace is race-balanced at real_acc.

    Raises:
        SpecError: If acc +/- gap/2 leaves [0, 1]
    """
    if len(races) != 2:
        raise SpecError(f"aggregation distortion cohort needs exactly 2 races, got {list(races)}")
    _check_offset(acc_low, gap, "acc_low")
    _check_offset(acc_high, gap, "acc_high")
    _check_accuracy(real_acc, "real_acc")
    first, second = races
    accuracy = {
        REAL_FACE: {first: real_acc, second: real_acc},
        "ApproachLow": {first: acc_low + gap / 2, second: acc_low - gap / 2},
        "ApproachHigh": {first: acc_high + gap / 2, second: acc_high - gap / 2},
    }
    return from_accuracy_spec(AccuracySpec(accuracy=accuracy, n_per_cell=n, seed=seed,
                                           name="aggregation_distortion"))


def read_spec(path: Union[str, Path], variant: Optional[str] = None) -> Dict[str, Any]:
    """
    Load a spec file and resolve its variant.

    A spec file is a JSON object with a "generator" key. Files holding
    several variants keep them under "variants"; the chosen variant's keys
    override the top-level ones. Without an explicit variant,
    "default_variant" is used.

    Raises:
        SpecError: For malformed files or unknown variants
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})")
    if not isinstance(data, dict):
        raise SpecError(f"{path}: spec must be a JSON object")

    variants = data.pop("variants", None)
    default_variant = data.pop("default_variant", None)
    if variants is not None:
        if not isinstance(variants, dict) or not variants:
            raise SpecError(f"{path}: 'variants' must be a non-empty object")
        chosen = variant or default_variant or next(iter(variants))
        if chosen not in variants:
            raise SpecError(f"{path}: unknown variant '{chosen}'. Available: {', '.join(variants)}")
        data.update(variants[chosen])
        data.setdefault("name", f"{path.stem}:{chosen}")
    elif variant is not None:
        raise SpecError(f"{path}: has no variants, got --variant {variant}")

    data.setdefault("name", path.stem)
    if data.get("generator", "accuracy") not in GENERATORS:
        raise SpecError(f"{path}: unknown generator '{data.get('generator')}'. Available: {', '.join(GENERATORS)}")
    return data


def _int(spec: Dict[str, Any], key: str, default: int) -> int:
    value = spec.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(f"'{key}' must be an integer, got {value!r}")
    return value


def _number(spec: Dict[str, Any], key: str, default: Optional[float] = None) -> float:
    value = spec.get(key, default)
    if value is None:
        raise SpecError(f"spec is missing '{key}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"'{key}' must be a number, got {value!r}")
    return float(value)


def accuracy_spec(spec: Dict[str, Any], seed: Optional[int] = None) -> AccuracySpec:
    """AccuracySpec from a resolved "accuracy" spec dictionary."""
    accuracy = spec.get("accuracy")
    if not isinstance(accuracy, dict) or not accuracy:
        raise SpecError("accuracy spec needs a non-empty 'accuracy' object of approach -> race -> accuracy")
    for approach, by_race in accuracy.items():
        if not isinstance(by_race, dict) or not by_race:
            raise SpecError(f"approach '{approach}' needs a race -> accuracy object")
    return AccuracySpec(
        accuracy=accuracy,
        n_per_cell=_int(spec, "n_per_cell", 10000),
        seed=seed if seed is not None else _int(spec, "seed", 0),
        noise=bool(spec.get("noise", False)),
        name=str(spec.get("name", "synthetic")),
    )


def generate(spec: Dict[str, Any], seed: Optional[int] = None) -> Cohort:
    """
    Generate the cohort a resolved spec describes.

    Args:
        spec: Output of read_spec
        seed: Overrides the spec's seed

    Returns:
        Cohort
    """
    generator = spec.get("generator", "accuracy")
    if generator == "accuracy":
        return from_accuracy_spec(accuracy_spec(spec, seed))

    races = tuple(spec.get("races", DEFAULT_RACES))
    seed = seed if seed is not None else _int(spec, "seed", 0)
    if generator == "bias_offset":
        return bias_offset_cohort(_number(spec, "gap"), _number(spec, "base", 0.6),
                                  _int(spec, "n", 1000), races=races, seed=seed)
    return aggregation_distortion_cohort(_number(spec, "acc_low"), _number(spec, "acc_high"),
                                         _number(spec, "gap"), _int(spec, "n", 1000),
                                         real_acc=_number(spec, "real_acc", 1.0), races=races, seed=seed)


def spec_thresholds(spec: Dict[str, Any]) -> Optional[Dict[str, float]]:
    """Per-race thresholds carried by a spec variant, if any."""
    thresholds = spec.get("thresholds")
    if thresholds is None:
        return None
    if not isinstance(thresholds, dict):
        raise SpecError("'thresholds' must be an object of race -> threshold")
    return {str(race): float(t) for race, t in thresholds.items()}
