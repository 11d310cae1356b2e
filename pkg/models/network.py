"""
Network data models for FairForge.

A Model is an ordered list of Layers with a fixed input shape. Tensors are
plain float32 numpy arrays in row-major order, shaped (C, H, W) for feature
maps and (N,) for vectors.
"""
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

LAYER_KINDS = ("conv2d", "linear", "relu", "maxpool", "avgpool", "flatten", "batchnorm", "sigmoid")
PRUNABLE_KINDS = ("conv2d", "linear")
ELEMENTWISE_KINDS = ("relu", "sigmoid", "batchnorm")


@dataclass(frozen=True, eq=False)
class Layer:
    """
    One layer of a sequential network.

    Only the parameters of the layer's kind are set:
    - conv2d: weight (C_out, C_in, kh, kw), bias (C_out,), stride, padding
    - linear: weight (out, in), bias (out,)
    - maxpool/avgpool: window, stride
    - batchnorm: mean, var, gamma, beta (C,), eps
    """
    kind: str
    weight: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None
    stride: int = 1
    padding: int = 0
    window: int = 2
    mean: Optional[np.ndarray] = None
    var: Optional[np.ndarray] = None
    gamma: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    eps: float = 1e-5

    def __str__(self) -> str:
        if self.weight is not None:
            return f"{self.kind}{tuple(self.weight.shape)}"
        return self.kind

    @property
    def prunable(self) -> bool:
        return self.kind in PRUNABLE_KINDS

    @property
    def out_units(self) -> int:
        """Number of output filters / features of a prunable layer."""
        return int(self.weight.shape[0])

    def arrays(self) -> Dict[str, np.ndarray]:
        """All parameter arrays that are set, by name."""
        names = ("weight", "bias", "mean", "var", "gamma", "beta")
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}

    def with_weight(self, weight: np.ndarray) -> "Layer":
        return replace(self, weight=weight)


@dataclass(frozen=True, eq=False)
class Model:
    """
    Sequential network, immutable after load.

    Construction validates the shape chain (see core.engine.infer_shapes).
    """
    layers: Tuple[Layer, ...]
    input_shape: Tuple[int, ...]
    name: str = "model"
    version: str = "1"

    def __post_init__(self):
        # imported lazily: core.engine depends on this module
        from core.engine import infer_shapes
        object.__setattr__(self, 'layers', tuple(self.layers))
        object.__setattr__(self, 'input_shape', tuple(int(d) for d in self.input_shape))
        infer_shapes(self.layers, self.input_shape)

    def __len__(self) -> int:
        return len(self.layers)

    def __str__(self) -> str:
        return f"{self.name} v{self.version}: " + " -> ".join(str(layer) for layer in self.layers)

    def prunable_indices(self, include_linear: bool = True) -> Tuple[int, ...]:
        """Indices of conv2d (and optionally linear) layers."""
        kinds = PRUNABLE_KINDS if include_linear else ("conv2d",)
        return tuple(i for i, layer in enumerate(self.layers) if layer.kind in kinds)

    def with_weights(self, weights: Dict[int, np.ndarray]) -> "Model":
        """Copy of the model with some layers' weight tensors replaced."""
        layers = tuple(
            layer.with_weight(weights[i]) if i in weights else layer
            for i, layer in enumerate(self.layers)
        )
        return Model(layers=layers, input_shape=self.input_shape, name=self.name, version=self.version)
