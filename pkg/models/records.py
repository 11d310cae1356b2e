"""
Prediction log data models for FairForge.

This module contains the core data structures for detector outputs:
single prediction records, the cohort they form, and per-cell counts.
"""
from dataclasses import dataclass
from typing import Iterable, List, Tuple

REAL_FACE = "RealFace"


@dataclass(frozen=True)
class PredictionRecord:
    """
    One detector output.

    A record holds the detector's probability that the face is fake,
    the ground truth (1 = fake) and the two stratification variables.
    """
    id: str
    score: float          # P(fake) in [0, 1]
    label: int            # 1 = fake, 0 = real
    race: str
    approach: str         # "RealFace" or a forgery approach name

    def __str__(self) -> str:
        """String representation for display purposes."""
        return f"[{self.race}/{self.approach}] {self.id}: {self.score:.4f} (label {self.label})"


@dataclass(frozen=True)
class Cohort:
    """
    A prediction log with its race and approach vocabularies.

    Races keep first-appearance order. Approaches put RealFace first and
    keep first-appearance order for the forgery approaches.
    """
    records: Tuple[PredictionRecord, ...]
    races: Tuple[str, ...]
    approaches: Tuple[str, ...]

    @classmethod
    def from_records(cls, records: Iterable[PredictionRecord]) -> "Cohort":
        """Build a cohort, deriving the ordered race/approach sets."""
        records = tuple(records)
        races = tuple(dict.fromkeys(r.race for r in records))
        seen = dict.fromkeys(r.approach for r in records)
        approaches = tuple(a for a in seen if a == REAL_FACE) + tuple(a for a in seen if a != REAL_FACE)
        return cls(records=records, races=races, approaches=approaches)

    def __len__(self) -> int:
        return len(self.records)

    def for_race(self, race: str) -> List[PredictionRecord]:
        """Get all records of one race."""
        return [r for r in self.records if r.race == race]


@dataclass
class CellCounts:
    """Confusion counts for one (race, approach) cell at a given threshold."""
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def size(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def predicted_fake(self) -> int:
        return self.tp + self.fp

    @property
    def correct(self) -> int:
        return self.tp + self.tn

    def add(self, label: int, predicted: bool):
        """Tally one record."""
        if label == 1:
            if predicted:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted:
            self.fp += 1
        else:
            self.tn += 1
