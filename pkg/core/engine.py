"""
Inference engine for FairForge.

A deliberately small, deterministic forward pass for sequential networks
made of conv2d, linear, relu, maxpool, avgpool, flatten, batchnorm and
sigmoid layers. All arithmetic is float32; feature maps are (C, H, W) and
vectors are (N,).
"""
import logging
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from core.errors import ModelFormatError, ShapeMismatchError
from models.network import ELEMENTWISE_KINDS, LAYER_KINDS, Layer

logger = logging.getLogger(__name__)

Shape = Tuple[int, ...]


def _window_out(size: int, window: int, stride: int, padding: int = 0) -> int:
    """floor((size + 2*padding - window) / stride) + 1"""
    return (size + 2 * padding - window) // stride + 1


def _check_vector(layer: Layer, name: str, length: int, index: int):
    array = getattr(layer, name)
    if array is not None and tuple(array.shape) != (length,):
        raise ShapeMismatchError(
            f"layer {index} ({layer.kind}): {name} shape {tuple(array.shape)} != ({length},)"
        )


def layer_output_shape(layer: Layer, shape: Shape, index: int = 0) -> Shape:
    """
    Output shape of one layer for a given input shape.

    Raises:
        ModelFormatError: For an unknown layer kind or missing parameters
        ShapeMismatchError: If the input shape does not fit the layer
    """
    kind = layer.kind
    if kind not in LAYER_KINDS:
        raise ModelFormatError(f"layer {index}: unknown kind '{kind}'")

    if kind == "conv2d":
        if layer.weight is None or layer.weight.ndim != 4:
            raise ModelFormatError(f"layer {index}: conv2d needs a 4-D weight")
        if len(shape) != 3:
            raise ShapeMismatchError(f"layer {index}: conv2d expects (C, H, W) input, got {shape}")
        c_out, c_in, kh, kw = layer.weight.shape
        if c_in != shape[0]:
            raise ShapeMismatchError(f"layer {index}: conv2d expects {c_in} input channels, got {shape[0]}")
        if layer.stride < 1 or layer.padding < 0:
            raise ShapeMismatchError(f"layer {index}: invalid stride {layer.stride} / padding {layer.padding}")
        _check_vector(layer, "bias", c_out, index)
        h = _window_out(shape[1], kh, layer.stride, layer.padding)
        w = _window_out(shape[2], kw, layer.stride, layer.padding)
        if h < 1 or w < 1:
            raise ShapeMismatchError(f"layer {index}: kernel {kh}x{kw} larger than padded input {shape[1:]}")
        return (int(c_out), h, w)

    if kind == "linear":
        if layer.weight is None or layer.weight.ndim != 2:
            raise ModelFormatError(f"layer {index}: linear needs a 2-D weight")
        if len(shape) != 1:
            raise ShapeMismatchError(f"layer {index}: linear expects a vector, got {shape} (missing flatten?)")
        out_features, in_features = layer.weight.shape
        if in_features != shape[0]:
            raise ShapeMismatchError(f"layer {index}: linear expects {in_features} inputs, got {shape[0]}")
        _check_vector(layer, "bias", out_features, index)
        return (int(out_features),)

    if kind in ("maxpool", "avgpool"):
        if len(shape) != 3:
            raise ShapeMismatchError(f"layer {index}: {kind} expects (C, H, W) input, got {shape}")
        if layer.window < 1 or layer.stride < 1:
            raise ShapeMismatchError(f"layer {index}: invalid window {layer.window} / stride {layer.stride}")
        h = _window_out(shape[1], layer.window, layer.stride)
        w = _window_out(shape[2], layer.window, layer.stride)
        if h < 1 or w < 1:
            raise ShapeMismatchError(f"layer {index}: window {layer.window} larger than input {shape[1:]}")
        return (shape[0], h, w)

    if kind == "flatten":
        return (int(np.prod(shape)),)

    if kind == "batchnorm":
        for name in ("mean", "var", "gamma", "beta"):
            if getattr(layer, name) is None:
                raise ModelFormatError(f"layer {index}: batchnorm is missing '{name}'")
            _check_vector(layer, name, shape[0], index)
        if not np.all(np.asarray(layer.var, dtype=np.float64) + layer.eps > 0):
            raise ModelFormatError(f"layer {index}: batchnorm needs var + eps > 0 in every channel")
        return shape

    # relu, sigmoid
    return shape


def infer_shapes(layers: Sequence[Layer], input_shape: Shape) -> List[Shape]:
    """
    Validate a layer chain and return every layer's output shape.

    Raises:
        ShapeMismatchError: If some layer does not accept its predecessor's output
    """
    if not layers:
        raise ModelFormatError("model has no layers")
    shapes = []
    shape = tuple(int(d) for d in input_shape)
    if not shape or any(d < 1 for d in shape):
        raise ShapeMismatchError(f"invalid input shape {shape}")
    for index, layer in enumerate(layers):
        shape = layer_output_shape(layer, shape, index)
        shapes.append(shape)
    return shapes


def conv2d_forward(x: np.ndarray, layer: Layer) -> np.ndarray:
    """
    Cross-correlation of a (C_in, H, W) input with (C_out, C_in, kh, kw) filters.

    Output is (C_out, H_out, W_out) with
    H_out = floor((H + 2*padding - kh) / stride) + 1.
    """
    x = np.asarray(x, dtype=np.float32)
    layer_output_shape(layer, x.shape)
    _, _, kh, kw = layer.weight.shape
    p, s = layer.padding, layer.stride

    padded = np.pad(x, ((0, 0), (p, p), (p, p))) if p else x
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))[:, ::s, ::s]
    out = np.einsum('chwij,ocij->ohw', windows, layer.weight.astype(np.float32, copy=False))
    if layer.bias is not None:
        out = out + layer.bias.astype(np.float32, copy=False)[:, None, None]
    return out.astype(np.float32, copy=False)


def linear_forward(x: np.ndarray, layer: Layer) -> np.ndarray:
    """y = W x + b for a vector input."""
    x = np.asarray(x, dtype=np.float32)
    layer_output_shape(layer, x.shape)
    out = layer.weight.astype(np.float32, copy=False) @ x
    if layer.bias is not None:
        out = out + layer.bias.astype(np.float32, copy=False)
    return out.astype(np.float32, copy=False)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x).astype(np.float32, copy=False)


def _pool_windows(x: np.ndarray, layer: Layer) -> np.ndarray:
    layer_output_shape(layer, x.shape)
    w, s = layer.window, layer.stride
    return sliding_window_view(x, (w, w), axis=(1, 2))[:, ::s, ::s]


def maxpool(x: np.ndarray, layer: Layer) -> np.ndarray:
    return _pool_windows(x, layer).max(axis=(-2, -1))


def avgpool(x: np.ndarray, layer: Layer) -> np.ndarray:
    return _pool_windows(x, layer).mean(axis=(-2, -1), dtype=np.float32)


def flatten(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1)


def batchnorm(x: np.ndarray, layer: Layer) -> np.ndarray:
    """Inference-mode batch normalization with fixed per-channel statistics."""
    layer_output_shape(layer, x.shape)
    extra = (1,) * (x.ndim - 1)
    scale = (layer.gamma / np.sqrt(layer.var + layer.eps)).astype(np.float32).reshape((-1,) + extra)
    mean = layer.mean.astype(np.float32).reshape((-1,) + extra)
    beta = layer.beta.astype(np.float32).reshape((-1,) + extra)
    return ((x - mean) * scale + beta).astype(np.float32, copy=False)


def apply_layer(layer: Layer, x: np.ndarray) -> np.ndarray:
    """Run one layer."""
    kind = layer.kind
    if kind == "conv2d":
        return conv2d_forward(x, layer)
    if kind == "linear":
        return linear_forward(x, layer)
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "maxpool":
        return maxpool(x, layer)
    if kind == "avgpool":
        return avgpool(x, layer)
    if kind == "flatten":
        return flatten(x)
    if kind == "batchnorm":
        return batchnorm(x, layer)
    raise ModelFormatError(f"unknown layer kind '{kind}'")


def _prepare_input(model, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    if tuple(x.shape) != tuple(model.input_shape):
        raise ShapeMismatchError(f"input shape {tuple(x.shape)} != model input {tuple(model.input_shape)}")
    if not np.all(np.isfinite(x)):
        raise ShapeMismatchError("input tensor has non-finite entries")
    return x


def _run_layer(layer: Layer, x: np.ndarray, position: int) -> np.ndarray:
    out = apply_layer(layer, x)
    if not np.all(np.isfinite(out)):
        raise ShapeMismatchError(f"layer {position} ({layer.kind}) produced non-finite values")
    return out


def forward(model, x) -> np.ndarray:
    """
    Run the whole model and return the final layer's output.

    Raises:
        ShapeMismatchError: If the input does not fit or some layer output
            is not finite
    """
    x = _prepare_input(model, x)
    for position, layer in enumerate(model.layers):
        x = _run_layer(layer, x, position)
    return x


def _tap_points(model, tap_layers: Iterable[int], post_activation: bool) -> Dict[int, int]:
    """
    Map each requested layer to the index whose output is recorded.

    Pre-activation taps record the conv/linear output itself; post-activation
    taps move past the run of elementwise layers that follows it.
    """
    points = {}
    for index in tap_layers:
        if not 0 <= index < len(model.layers) or not model.layers[index].prunable:
            raise ShapeMismatchError(f"tap index {index} is not a conv2d/linear layer")
        point = index
        if post_activation:
            while point + 1 < len(model.layers) and model.layers[point + 1].kind in ELEMENTWISE_KINDS:
                point += 1
        points[index] = point
    return points


def forward_with_taps(model, x, tap_layers: Iterable[int] = (),
                      post_activation: bool = False) -> Tuple[float, Dict[int, np.ndarray]]:
    """
    Forward pass that also records intermediate layer outputs.

    Args:
        model: Model to run
        x: Input tensor shaped like model.input_shape
        tap_layers: Indices of conv2d/linear layers to record
        post_activation: Record after the following nonlinearity instead of
            the raw layer output

    Returns:
        (score, taps) where score is in [0, 1] and taps maps each requested
        layer index to its recorded tensor

    Raises:
        ShapeMismatchError: For an invalid tap index, a non-finite layer
            output or a final output that is not a single value
    """
    points = _tap_points(model, tap_layers, post_activation)
    wanted = {}
    for index, point in points.items():
        wanted.setdefault(point, []).append(index)

    x = _prepare_input(model, x)
    taps = {}
    for position, layer in enumerate(model.layers):
        x = _run_layer(layer, x, position)
        for index in wanted.get(position, ()):
            taps[index] = x.copy()

    if x.size != 1:
        raise ShapeMismatchError(f"model output has {x.size} values, expected a single logit")
    output = x.reshape(-1)[0]
    score = float(output) if model.layers[-1].kind == "sigmoid" else float(expit(np.float64(output)))
    return score, taps


def predict(model, x) -> float:
    """P(fake) for one input."""
    score, _ = forward_with_taps(model, x)
    return score
