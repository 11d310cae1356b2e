"""
Reciprocal-of-bias pruning baseline.

Every weight of a unit gets the same score, 1 / BIAS_i, so units with the
largest racial activation bias are pruned first. Within a unit the
magnitude tie-break decides which weights go.
"""
from typing import Optional

import numpy as np

from core.base_pruner import BasePruner


class RoBAPruner(BasePruner):
    method_id = "roba"
    method_name = "RoBA"
    description = "Reciprocal of per-unit racial activation bias"
    needs_calibration = True

    def score(self, weight: np.ndarray, bias: Optional[np.ndarray]) -> np.ndarray:
        unit_bias = self.unit_bias(weight, bias)
        return self.safe_divide(np.ones(weight.shape, dtype=np.float64), unit_bias)
