"""
Per-race threshold search for FairForge.

Detectors often produce score distributions that differ by race, so a
single 0.5 cut-off treats races unequally. This module finds, per race,
the threshold that maximizes accuracy and re-evaluates a cohort with
those per-race thresholds.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from core.errors import DegenerateCohort, ThresholdPlanError
from core.metrics import evaluate
from core.utils import parallel_map
from models import Cohort, FairnessReport, ThresholdPlan

logger = logging.getLogger(__name__)


def _as_arrays(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} differ in shape")
    return scores, labels


def threshold_candidates(scores) -> np.ndarray:
    """
    Candidate thresholds: 0, 1 and the midpoints of adjacent distinct scores.

    When a midpoint rounds down onto the lower score, the upper score is
    used instead so the candidate still separates the pair.
    """
    distinct = np.unique(np.asarray(scores, dtype=np.float64))
    lower, upper = distinct[:-1], distinct[1:]
    midpoints = (lower + upper) / 2.0
    midpoints = np.where(midpoints <= lower, upper, midpoints)
    return np.unique(np.concatenate(([0.0], midpoints, [1.0])))


def correct_counts(scores, labels, candidates: np.ndarray) -> np.ndarray:
    """Number of correctly classified records at each candidate threshold."""
    scores, labels = _as_arrays(scores, labels)
    positives = np.sort(scores[labels == 1])
    negatives = np.sort(scores[labels == 0])
    # predicted fake iff score >= t
    true_positives = len(positives) - np.searchsorted(positives, candidates, side='left')
    true_negatives = np.searchsorted(negatives, candidates, side='left')
    return (true_positives + true_negatives).astype(np.int64)


def accuracy_at(scores, labels, threshold: float) -> float:
    """Accuracy of the rule score >= threshold."""
    scores, labels = _as_arrays(scores, labels)
    if len(scores) == 0:
        raise DegenerateCohort("no records to score")
    predicted = (scores >= threshold).astype(np.int64)
    return float(np.count_nonzero(predicted == labels)) / len(scores)


def optimal_threshold(scores, labels) -> Tuple[float, float]:
    """
    Find the accuracy-maximizing threshold for one race.

    Every candidate threshold is evaluated exhaustively; among equally
    accurate candidates the smallest one wins.

    Args:
        scores: Detector scores of the race's records
        labels: Ground truth (1 = fake)

    Returns:
        (threshold, accuracy)

    Raises:
        DegenerateCohort: If the records are all real or all fake
    """
    scores, labels = _as_arrays(scores, labels)
    n_pos = int(np.count_nonzero(labels == 1))
    if n_pos == 0 or n_pos == len(labels):
        raise DegenerateCohort("threshold search needs at least one real and one fake record")

    candidates = threshold_candidates(scores)
    correct = correct_counts(scores, labels, candidates)
    best = int(np.argmax(correct))
    return float(candidates[best]), float(correct[best]) / len(scores)


def _search_race(cohort: Cohort, race: str) -> Tuple[float, float, List[Tuple[float, float]]]:
    records = cohort.for_race(race)
    scores = [r.score for r in records]
    labels = [r.label for r in records]
    threshold, accuracy = optimal_threshold(scores, labels)

    candidates = threshold_candidates(scores)
    accuracies = correct_counts(scores, labels, candidates) / len(records)
    trace = [(float(t), float(a)) for t, a in zip(candidates, accuracies)]
    return threshold, accuracy, trace


def plan_thresholds(cohort: Cohort, max_workers: int = 1) -> ThresholdPlan:
    """
    Search the optimal threshold of every race.

    Args:
        cohort: Prediction log
        max_workers: Races searched in parallel

    Returns:
        ThresholdPlan with the per-race thresholds and search traces
    """
    races = list(cohort.races)
    results = parallel_map(lambda race: _search_race(cohort, race), races, max_workers=max_workers)

    plan = ThresholdPlan(per_race={}, objective="accuracy")
    for race, (threshold, accuracy, trace) in zip(races, results):
        plan.per_race[race] = threshold
        plan.search_trace[race] = trace
        logger.info(f"Race {race}: best threshold {threshold:.4f} (accuracy {accuracy:.4f})")
    return plan


def score_histogram(cohort: Cohort, bins: int = 20) -> Dict[str, np.ndarray]:
    """
    Per-race counts of scores in equal-width bins over [0, 1].

    The last bin includes its right edge, so a score of 1.0 is counted.

    Args:
        cohort: Prediction log
        bins: Number of bins

    Returns:
        race -> integer array of length bins
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    histogram = {}
    for race in cohort.races:
        scores = np.array([r.score for r in cohort.for_race(race)], dtype=np.float64)
        counts, _ = np.histogram(scores, bins=bins, range=(0.0, 1.0))
        histogram[race] = counts.astype(np.int64)
    return histogram


def evaluate_with_plan(cohort: Cohort, plan: ThresholdPlan, skip_missing: bool = False) -> FairnessReport:
    """
    Evaluate a cohort thresholding each record at its race's threshold.

    Raises:
        ThresholdPlanError: If the plan misses a race of the cohort
    """
    missing = [race for race in cohort.races if race not in plan.per_race]
    if missing:
        raise ThresholdPlanError(f"threshold plan has no entry for race(s): {', '.join(missing)}")
    return evaluate(cohort, plan.per_race, skip_missing=skip_missing)


def load_plan(path: Union[str, Path]) -> ThresholdPlan:
    """
    Read a threshold plan file: a JSON object {race: threshold}.

    Raises:
        ThresholdPlanError: If the file is not such an object or a
            threshold is outside [0, 1]
    """
    data = json.loads(Path(path).read_text(encoding='utf-8'))
    if not isinstance(data, dict) or not data:
        raise ThresholdPlanError(f"{path}: expected a non-empty JSON object of race -> threshold")
    for race, value in data.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ThresholdPlanError(f"{path}: threshold for race '{race}' is not a number")
        if not 0.0 <= float(value) <= 1.0:
            raise ThresholdPlanError(f"{path}: threshold {value} for race '{race}' outside [0, 1]")
    return ThresholdPlan.from_dict(data)


def save_plan(plan: ThresholdPlan, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(plan.to_dict(), indent=2) + "\n", encoding='utf-8')
    logger.info(f"Saved threshold plan to {path}")
    return path
