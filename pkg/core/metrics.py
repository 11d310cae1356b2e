"""
Fairness metrics for FairForge.

This module computes three families of group-fairness metrics over a
prediction log stratified by race and forgery approach, plus utility:

- Naive: DPD, DEOdds, DEO, STD on pooled per-race rates.
- Approach Averaged (AA): each metric computed per approach, then averaged,
  so opposite per-approach biases cannot cancel out.
- Utility Regularized (UR): the AA terms divided by the approach accuracy
  ACC_f before averaging, so a gap on a weak approach weighs more.

Conventions:
- "positive" means predicted fake (score >= threshold).
- Standard deviations are population std (divide by N).
- ACC_f is the unweighted mean of per-race accuracies within approach f.
- Fake approaches are always aggregated in sorted order, RealFace first.
"""
import logging
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy.stats import rankdata

from core.errors import DegenerateCohort, DegenerateUtility
from core.records import Threshold, group_cells
from models import Cohort, FairnessReport, REAL_FACE

logger = logging.getLogger(__name__)


def pairwise_gap(values: Mapping[str, float]) -> float:
    """
    Largest pairwise difference between races.

    Args:
        values: race -> rate

    Returns:
        max(values) - min(values)

    Raises:
        DegenerateCohort: With fewer than 2 races
    """
    if len(values) < 2:
        raise DegenerateCohort(f"pairwise gap needs at least 2 races, got {len(values)}")
    numbers = [float(v) for v in values.values()]
    return max(numbers) - min(numbers)


def population_std(values: Mapping[str, float]) -> float:
    """Population standard deviation over races."""
    return float(np.std(np.array(list(values.values()), dtype=np.float64)))


class CellTable:
    """
    Per-cell counts of a cohort at a threshold, as race x approach arrays.

    n[i, j] is the cell size, pred[i, j] the predicted-fake count and
    correct[i, j] the correctly classified count for race i, approach j.
    """

    def __init__(self, cohort: Cohort, threshold: Threshold, skip_missing: bool = False):
        if len(cohort) == 0:
            raise DegenerateCohort("cohort is empty")
        if len(cohort.races) < 2:
            raise DegenerateCohort(f"cohort needs at least 2 races, got {list(cohort.races)}")

        self.races = list(cohort.races)
        self.approaches = list(cohort.approaches)
        self.skip_missing = skip_missing

        cells = group_cells(cohort, threshold)
        shape = (len(self.races), len(self.approaches))
        self.n = np.zeros(shape, dtype=np.int64)
        self.pred = np.zeros(shape, dtype=np.int64)
        self.correct = np.zeros(shape, dtype=np.int64)
        for i, race in enumerate(self.races):
            for j, approach in enumerate(self.approaches):
                counts = cells[(race, approach)]
                self.n[i, j] = counts.size
                self.pred[i, j] = counts.predicted_fake
                self.correct[i, j] = counts.correct

    @property
    def fake_approaches(self) -> List[str]:
        return sorted(a for a in self.approaches if a != REAL_FACE)

    @property
    def ordered_approaches(self) -> List[str]:
        """All approaches in aggregation order: RealFace first, then sorted fakes."""
        head = [REAL_FACE] if REAL_FACE in self.approaches else []
        return head + self.fake_approaches

    def column(self, approach: str) -> int:
        return self.approaches.index(approach)

    def _rates(self, numerator: np.ndarray, denominator: np.ndarray, what: str) -> Dict[str, float]:
        """
        race -> numerator / denominator, dropping or rejecting empty races.

        Raises:
            DegenerateCohort: If a race is empty (and skip_missing is off) or
                fewer than 2 races remain
        """
        empty = [race for race, d in zip(self.races, denominator) if d == 0]
        if empty:
            if not self.skip_missing:
                raise DegenerateCohort(f"no records for race(s) {empty} in {what}")
            logger.warning(f"Dropping race(s) {empty} from {what}: no records")
        rates = {
            race: float(num) / float(den)
            for race, num, den in zip(self.races, numerator, denominator)
            if den > 0
        }
        if len(rates) < 2:
            raise DegenerateCohort(f"fewer than 2 races left in {what}")
        return rates

    def positive_rates(self, approach: str) -> Dict[str, float]:
        """P(predicted fake | race, approach)."""
        j = self.column(approach)
        return self._rates(self.pred[:, j], self.n[:, j], f"approach '{approach}'")

    def accuracies(self, approach: str) -> Dict[str, float]:
        """Accuracy per race within one approach."""
        j = self.column(approach)
        return self._rates(self.correct[:, j], self.n[:, j], f"approach '{approach}'")

    def pooled_positive_rates(self) -> Dict[str, float]:
        return self._rates(self.pred.sum(axis=1), self.n.sum(axis=1), "pooled records")

    def pooled_accuracies(self) -> Dict[str, float]:
        return self._rates(self.correct.sum(axis=1), self.n.sum(axis=1), "pooled records")

    def true_positive_rates(self) -> Dict[str, float]:
        """Per-race TPR pooled over all fake approaches."""
        fakes = [self.column(a) for a in self.fake_approaches]
        if not fakes:
            raise DegenerateCohort("no fake approaches in cohort")
        return self._rates(self.pred[:, fakes].sum(axis=1), self.n[:, fakes].sum(axis=1), "fake records")

    def false_positive_rates(self) -> Dict[str, float]:
        """Per-race FPR on RealFace records."""
        if REAL_FACE not in self.approaches:
            raise DegenerateCohort(f"no '{REAL_FACE}' records in cohort")
        return self.positive_rates(REAL_FACE)

    def approach_terms(self) -> Dict[str, Dict[str, float]]:
        """
        Per-approach fairness terms, in aggregation order.

        gap_pos: pairwise gap of the positive rate
        acc: ACC_f, the race-mean accuracy
        std_acc: population std of per-race accuracy
        acc_gap: pairwise gap of per-race accuracy
        """
        terms = {}
        for approach in self.ordered_approaches:
            accs = self.accuracies(approach)
            terms[approach] = {
                'gap_pos': pairwise_gap(self.positive_rates(approach)),
                'acc': float(np.mean(list(accs.values()))),
                'std_acc': population_std(accs),
                'acc_gap': pairwise_gap(accs),
            }
        return terms


def _naive(table: CellTable) -> Dict[str, float]:
    tpr_gap = pairwise_gap(table.true_positive_rates())
    fpr_gap = pairwise_gap(table.false_positive_rates())
    return {
        'dpd': pairwise_gap(table.pooled_positive_rates()),
        'deodds': 0.5 * (fpr_gap + tpr_gap),
        'deo': tpr_gap,
        'std': population_std(table.pooled_accuracies()),
    }


def _averaged(table: CellTable, terms: Dict[str, Dict[str, float]], regularized: bool) -> Dict[str, float]:
    """Shared AA / UR aggregation; UR divides every term by ACC_f."""
    if REAL_FACE not in terms:
        raise DegenerateCohort(f"no '{REAL_FACE}' records in cohort")
    fakes = table.fake_approaches
    if not fakes:
        raise DegenerateCohort("no fake approaches in cohort")

    def scaled(approach: str, key: str) -> float:
        value = terms[approach][key]
        if not regularized:
            return value
        acc = terms[approach]['acc']
        if acc <= 0.0:
            raise DegenerateUtility(f"accuracy of approach '{approach}' is 0")
        return value / acc

    order = table.ordered_approaches
    dpd = float(np.mean([scaled(a, 'gap_pos') for a in order]))
    deo = float(np.mean([scaled(a, 'gap_pos') for a in fakes]))
    deodds = 0.5 * (scaled(REAL_FACE, 'gap_pos') + deo)
    std = float(np.mean([scaled(a, 'std_acc') for a in order]))

    prefix = 'ur' if regularized else 'aa'
    return {f'{prefix}dpd': dpd, f'{prefix}deodds': deodds, f'{prefix}deo': deo, f'{prefix}std': std}


def naive_metrics(cohort: Cohort, threshold: Threshold = 0.5, skip_missing: bool = False) -> Dict[str, float]:
    """
    DPD, DEOdds, DEO and STD on pooled per-race rates.

    dpd: gap of P(fake | race) over all records
    deodds: mean of the FPR gap (RealFace) and the pooled TPR gap (fakes)
    deo: gap of the pooled TPR
    std: population std of per-race accuracy
    """
    return _naive(CellTable(cohort, threshold, skip_missing))


def approach_averaged_metrics(cohort: Cohort, threshold: Threshold = 0.5,
                              skip_missing: bool = False) -> Dict[str, float]:
    """
    AADPD, AADEOdds, AADEO and AASTD.

    aadpd averages the positive-rate gap over every approach (RealFace
    included); aadeo averages it over fake approaches only; aadeodds is the
    mean of the RealFace gap and aadeo; aastd averages per-approach
    accuracy std over every approach.
    """
    table = CellTable(cohort, threshold, skip_missing)
    return _averaged(table, table.approach_terms(), regularized=False)


def utility_regularized_metrics(cohort: Cohort, threshold: Threshold = 0.5,
                                skip_missing: bool = False) -> Dict[str, float]:
    """
    URDPD, URDEOdds, URDEO and URSTD: AA aggregation of gap / ACC_f.

    Raises:
        DegenerateUtility: If some ACC_f is 0
    """
    table = CellTable(cohort, threshold, skip_missing)
    return _averaged(table, table.approach_terms(), regularized=True)


def auc(cohort: Cohort) -> float:
    """
    Area under the ROC curve as the Mann-Whitney probability.

    P(score_fake > score_real) + 0.5 * P(tie), pooled over all records,
    computed from mid-ranks.

    Raises:
        DegenerateCohort: If the cohort has only one class
    """
    scores = np.array([r.score for r in cohort.records], dtype=np.float64)
    labels = np.array([r.label for r in cohort.records], dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateCohort("AUC needs at least one fake and one real record")

    ranks = rankdata(scores)
    u_statistic = float(ranks[labels == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_statistic / (n_pos * n_neg)


def _per_race(table: CellTable) -> Dict[str, Dict[str, Optional[float]]]:
    """Pooled per-race accuracy, TPR, TNR and positive rate."""
    fakes = [table.column(a) for a in table.fake_approaches]
    real = table.column(REAL_FACE) if REAL_FACE in table.approaches else None
    breakdown = {}
    for i, race in enumerate(table.races):
        n = table.n[i].sum()
        n_fake = table.n[i, fakes].sum() if fakes else 0
        n_real = table.n[i, real] if real is not None else 0
        breakdown[race] = {
            'acc': float(table.correct[i].sum()) / n if n else None,
            'tpr': float(table.pred[i, fakes].sum()) / n_fake if n_fake else None,
            'tnr': float(table.correct[i, real]) / n_real if n_real else None,
            'positive_rate': float(table.pred[i].sum()) / n if n else None,
        }
    return breakdown


def _accuracy_table(table: CellTable) -> Dict[str, Dict[str, Optional[float]]]:
    """approach -> race -> accuracy, None for empty cells."""
    result = {}
    for approach in table.ordered_approaches:
        j = table.column(approach)
        result[approach] = {
            race: (float(table.correct[i, j]) / table.n[i, j] if table.n[i, j] else None)
            for i, race in enumerate(table.races)
        }
    return result


def evaluate(cohort: Cohort, threshold: Threshold = 0.5, skip_missing: bool = False) -> FairnessReport:
    """
    Compute the full fairness report for one run.

    Args:
        cohort: Prediction log
        threshold: Global threshold or race -> threshold map
        skip_missing: Drop races with empty cells (with a warning) instead
            of failing

    Returns:
        FairnessReport with all 12 metrics, AUC/ACC and breakdowns

    Raises:
        DegenerateCohort: For empty cohorts or required empty cells
        DegenerateUtility: If some ACC_f is 0
        ThresholdPlanError: For incomplete per-race thresholds
    """
    table = CellTable(cohort, threshold, skip_missing)
    terms = table.approach_terms()

    total = int(table.n.sum())
    utility = {'auc': auc(cohort), 'acc': float(table.correct.sum()) / total}

    if isinstance(threshold, Mapping):
        threshold_used = {race: float(threshold[race]) for race in cohort.races}
    else:
        threshold_used = float(threshold)

    report = FairnessReport(
        naive=_naive(table),
        approach_averaged=_averaged(table, terms, regularized=False),
        utility_regularized=_averaged(table, terms, regularized=True),
        utility=utility,
        per_approach=terms,
        threshold_used=threshold_used,
        per_race=_per_race(table),
        accuracy_table=_accuracy_table(table),
        pooled_acc_gap=pairwise_gap(table.pooled_accuracies()),
    )
    logger.debug(f"Evaluated {total} records: aadpd={report.approach_averaged['aadpd']:.4f}")
    return report
