"""
Pruning data models for FairForge.

This module contains the activation bias profile measured on a calibration
set and the boolean masks that record which weights were zeroed.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np


@dataclass
class LayerBias:
    """
    Racial activation bias of one prunable layer.

    z has one row per race (in profile race order) and one column per
    output unit; bias is the population std of each column.
    """
    z: np.ndarray
    bias: np.ndarray


@dataclass
class BiasProfile:
    """Per-layer racial activation bias for a model and calibration set."""
    races: Tuple[str, ...]
    layers: Dict[int, LayerBias]
    sample_counts: Dict[str, int] = field(default_factory=dict)

    def bias_for(self, layer_index: int) -> np.ndarray:
        return self.layers[layer_index].bias


@dataclass
class PruneMask:
    """
    Boolean masks congruent with each pruned layer's weight (True = pruned).

    Layers that were not eligible for pruning are absent from `layers`.
    """
    method: str
    rate: float
    layers: Dict[int, np.ndarray] = field(default_factory=dict)

    def pruned_counts(self) -> Dict[int, int]:
        """Number of pruned weights per layer index."""
        return {index: int(mask.sum()) for index, mask in self.layers.items()}

    @property
    def total_pruned(self) -> int:
        return sum(self.pruned_counts().values())

    def __str__(self) -> str:
        return f"PruneMask({self.method}, rate={self.rate:g}, pruned={self.total_pruned})"
