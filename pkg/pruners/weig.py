"""
Magnitude pruning baseline.
"""
from typing import Optional

import numpy as np

from core.base_pruner import BasePruner


class WeightMagnitudePruner(BasePruner):
    """Score = |W|. Ignores calibration entirely."""

    method_id = "weig"
    method_name = "WEIG"
    description = "Absolute weight value only"
    needs_calibration = False

    def score(self, weight: np.ndarray, bias: Optional[np.ndarray] = None) -> np.ndarray:
        return np.abs(weight.astype(np.float64))
