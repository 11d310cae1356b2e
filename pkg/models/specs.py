"""
Synthetic cohort spec models for FairForge.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple


@dataclass(frozen=True)
class AccuracySpec:
    """
    Target accuracies per (race, approach) cell.

    accuracy maps approach -> race -> target accuracy. Exact targets are
    only reachable up to 1/n_per_cell granularity.
    """
    accuracy: Dict[str, Dict[str, float]]
    n_per_cell: int = 10000
    seed: int = 0
    noise: bool = False
    name: str = "synthetic"

    @property
    def races(self) -> Tuple[str, ...]:
        seen = {}
        for by_race in self.accuracy.values():
            seen.update(dict.fromkeys(by_race))
        return tuple(seen)

    @property
    def approaches(self) -> Tuple[str, ...]:
        return tuple(self.accuracy)

    def cells(self):
        """Yield (approach, race, accuracy) in spec order."""
        for approach, by_race in self.accuracy.items():
            for race, acc in by_race.items():
                yield approach, race, acc
