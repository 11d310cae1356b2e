"""
Sample set models for FairForge.

A sample set is a list of race-labelled input tensors. Calibration sets
only need the race; evaluation sets also carry approach and label so a
model's outputs can be turned into a prediction log.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class Sample:
    """One input tensor with its stratification labels."""
    id: str
    tensor: np.ndarray
    race: str
    approach: Optional[str] = None
    label: Optional[int] = None


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Ordered samples; races keep first-appearance order."""
    samples: Tuple[Sample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def races(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(s.race for s in self.samples))

    @property
    def labelled(self) -> bool:
        """Whether every sample carries approach and label."""
        return all(s.approach is not None and s.label is not None for s in self.samples)

    def for_race(self, race: str) -> List[Sample]:
        return [s for s in self.samples if s.race == race]
