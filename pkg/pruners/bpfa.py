"""
Bias Pruning with Fair Activations.

A weight scores |W| divided by the racial activation bias of its output
unit: small weights feeding strongly race-dependent units go first.
"""
from typing import Optional

import numpy as np

from core.base_pruner import BasePruner


class BPFAPruner(BasePruner):
    """Score = |W_ijkm| / BIAS_i; a zero bias protects the whole unit (+inf)."""

    method_id = "bpfa"
    method_name = "BPFA"
    description = "Weight magnitude divided by per-unit racial activation bias"
    needs_calibration = True

    def score(self, weight: np.ndarray, bias: Optional[np.ndarray]) -> np.ndarray:
        unit_bias = self.unit_bias(weight, bias)
        return self.safe_divide(np.abs(weight.astype(np.float64)), unit_bias)
