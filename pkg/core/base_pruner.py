"""
Base pruner abstract class for FairForge.

This module defines the abstract base class that all pruning score
methods must implement. A pruner turns a layer's weight tensor (and, if
it needs calibration, the layer's per-unit racial activation bias) into
a score tensor of the same shape; the lowest scores are pruned first.
"""
from abc import ABC, abstractmethod
from typing import Optional
import logging

import numpy as np

from core.errors import PruningError

logger = logging.getLogger(__name__)


class BasePruner(ABC):
    """
    Abstract base class for all pruning score methods.

    Pruner implementations should:
    - Set method_id, method_name and needs_calibration as class attributes
    - Implement score()
    - Map a zero bias to +infinity rather than dividing by zero
    """

    # Pruner metadata (set in subclass)
    method_id: str = ""              # e.g., "bpfa"
    method_name: str = ""            # e.g., "BPFA"
    description: str = ""
    needs_calibration: bool = True   # whether score() uses the activation bias

    def __init__(self):
        """Validate the pruner metadata."""
        if not self.method_id or not self.method_name:
            raise ValueError("Pruner must set method_id and method_name")
        logger.debug(f"Initialized pruner: {self.method_name} ({self.method_id})")

    @abstractmethod
    def score(self, weight: np.ndarray, bias: Optional[np.ndarray]) -> np.ndarray:
        """
        Compute pruning scores for one layer.

        Args:
            weight: Layer weight, (C_out, C_in, kh, kw) or (out, in)
            bias: Activation bias per output unit, length C_out; None for
                pruners that do not need calibration

        Returns:
            float64 array congruent with weight

        Raises:
            PruningError: If bias is missing or has the wrong length
        """
        pass

    def unit_bias(self, weight: np.ndarray, bias: Optional[np.ndarray]) -> np.ndarray:
        """
        Bias reshaped to broadcast over each unit's weights.

        Raises:
            PruningError: If bias is missing or does not match C_out
        """
        if bias is None:
            raise PruningError(f"{self.method_name} needs an activation bias profile")
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (weight.shape[0],):
            raise PruningError(
                f"{self.method_name}: bias length {bias.shape} does not match {weight.shape[0]} output units"
            )
        return bias.reshape((-1,) + (1,) * (weight.ndim - 1))

    @staticmethod
    def safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
        """numerator / denominator with +inf wherever denominator is 0."""
        numerator, denominator = np.broadcast_arrays(numerator, denominator)
        result = np.full(numerator.shape, np.inf, dtype=np.float64)
        np.divide(numerator, denominator, out=result, where=denominator != 0)
        return result

    def __str__(self) -> str:
        """String representation of the pruner."""
        return f"{self.method_name} ({self.method_id})"

    def __repr__(self) -> str:
        """Detailed string representation."""
        return f"<{self.__class__.__name__}(id='{self.method_id}', calibration={self.needs_calibration})>"
