"""
Evaluation result models for FairForge.

This module contains the data structures produced by the metrics,
threshold and pruning modules: fairness reports, threshold plans,
report bundles and pruning sweep grids.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

NAIVE_KEYS = ("dpd", "deodds", "deo", "std")
AA_KEYS = ("aadpd", "aadeodds", "aadeo", "aastd")
UR_KEYS = ("urdpd", "urdeodds", "urdeo", "urstd")
FAIRNESS_KEYS = NAIVE_KEYS + AA_KEYS + UR_KEYS
UTILITY_KEYS = ("auc", "acc")

# family name -> metric keys, in table row order
METRIC_GROUPS = (
    ("naive", NAIVE_KEYS),
    ("approach_averaged", AA_KEYS),
    ("utility_regularized", UR_KEYS),
    ("utility", UTILITY_KEYS),
)


@dataclass
class FairnessReport:
    """
    The 12 fairness metrics plus utility for one evaluation run.

    per_approach maps approach -> {gap_pos, acc, std_acc, acc_gap}.
    per_race maps race -> pooled {acc, tpr, tnr, positive_rate}; rates that
    are undefined for a race (no fake or no real records) are None.
    accuracy_table maps approach -> race -> accuracy.
    """
    naive: Dict[str, float]
    approach_averaged: Dict[str, float]
    utility_regularized: Dict[str, float]
    utility: Dict[str, float]
    per_approach: Dict[str, Dict[str, float]]
    threshold_used: Union[float, Dict[str, float]]
    per_race: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)
    accuracy_table: Dict[str, Dict[str, float]] = field(default_factory=dict)
    pooled_acc_gap: Optional[float] = None

    def metric(self, key: str) -> float:
        """Look up any of the 12 fairness metrics or auc/acc by name."""
        for group, keys in METRIC_GROUPS:
            if key in keys:
                return getattr(self, group)[key]
        raise KeyError(f"Unknown metric: {key}")

    def fairness_values(self) -> List[float]:
        """The 12 fairness metrics in table order."""
        return [self.metric(key) for key in FAIRNESS_KEYS]

    @property
    def fairness_mean(self) -> float:
        """Mean of the 12 fairness metrics."""
        values = self.fairness_values()
        return sum(values) / len(values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'naive': dict(self.naive),
            'approach_averaged': dict(self.approach_averaged),
            'utility_regularized': dict(self.utility_regularized),
            'utility': dict(self.utility),
            'per_approach': {a: dict(v) for a, v in self.per_approach.items()},
            'threshold_used': self.threshold_used if isinstance(self.threshold_used, float) else dict(self.threshold_used),
            'per_race': {r: dict(v) for r, v in self.per_race.items()},
            'accuracy_table': {a: dict(v) for a, v in self.accuracy_table.items()},
            'pooled_acc_gap': self.pooled_acc_gap,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FairnessReport":
        threshold = data['threshold_used']
        return cls(
            naive=dict(data['naive']),
            approach_averaged=dict(data['approach_averaged']),
            utility_regularized=dict(data['utility_regularized']),
            utility=dict(data['utility']),
            per_approach={a: dict(v) for a, v in data['per_approach'].items()},
            threshold_used=float(threshold) if isinstance(threshold, (int, float)) else dict(threshold),
            per_race={r: dict(v) for r, v in data.get('per_race', {}).items()},
            accuracy_table={a: dict(v) for a, v in data.get('accuracy_table', {}).items()},
            pooled_acc_gap=data.get('pooled_acc_gap'),
        )


@dataclass
class ThresholdPlan:
    """
    Per-race decision thresholds.

    search_trace keeps, per race, the (threshold, accuracy) pairs that were
    evaluated during the search, in ascending threshold order.
    """
    per_race: Dict[str, float]
    objective: str = "accuracy"
    search_trace: Dict[str, List[tuple]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, float]:
        """Serialized form: {race: threshold}."""
        return dict(self.per_race)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ThresholdPlan":
        return cls(per_race={str(race): float(t) for race, t in data.items()})


@dataclass
class ReportBundle:
    """Several named runs plus per-metric rankings of their names."""
    reports: Dict[str, FairnessReport]
    rankings: Dict[str, List[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.reports)


@dataclass
class SweepRow:
    """
    One (method, rate) cell of a pruning sweep.

    report is None when the pruned model could not be evaluated at all
    (for example an approach accuracy fell to zero).
    """
    method: str
    rate: float
    auc: float
    acc: float
    usable: bool
    report: Optional[FairnessReport] = None
    pruned: Dict[int, int] = field(default_factory=dict)   # layer index -> pruned weights

    @property
    def fairness_mean(self) -> Optional[float]:
        if self.report is None:
            return None
        return self.report.fairness_mean

    def __str__(self) -> str:
        """String representation for display purposes."""
        status = "ok" if self.usable else "unusable"
        return f"{self.method}@{self.rate:g}: auc={self.auc:.4f} ({status})"


@dataclass
class SweepGrid:
    """Baseline row of the unpruned model plus |methods| x |rates| rows."""
    baseline: SweepRow
    rows: List[SweepRow]

    def rows_for(self, method: str) -> List[SweepRow]:
        return [row for row in self.rows if row.method == method]
