"""
Shared builders for the FairForge test suites.

Toy models, race-labelled sample sets, cohorts and loop-based reference
implementations used as independent oracles.
"""
import math
from typing import Dict, List, Sequence

import numpy as np

from models import Cohort, Layer, Model, PredictionRecord, REAL_FACE, Sample, SampleSet

RACES = ("Caucasian", "Asian", "African", "Indian")

TABLE6_FIXED = {
    REAL_FACE: {"Caucasian": 0.7960, "Asian": 0.7201, "African": 0.8449, "Indian": 0.7715},
    "FaceSwap": {"Caucasian": 0.8910, "Asian": 0.8949, "African": 0.7668, "Indian": 0.8968},
}

TABLE6_BEST = {
    REAL_FACE: {"Caucasian": 0.8964, "Asian": 0.8813, "African": 0.8767, "Indian": 0.8888},
    "FaceSwap": {"Caucasian": 0.8265, "Asian": 0.7883, "African": 0.7373, "Indian": 0.8264},
}


def record(rid: str, score: float, race: str, approach: str) -> PredictionRecord:
    return PredictionRecord(id=rid, score=score, label=0 if approach == REAL_FACE else 1, race=race, approach=approach)


def cohort_from_cells(cells: Dict[tuple, Sequence[float]]) -> Cohort:
    """Cohort from {(race, approach): [scores]}."""
    records = []
    for (race, approach), scores in cells.items():
        for k, score in enumerate(scores):
            records.append(record(f"{race}-{approach}-{k}", float(score), race, approach))
    return Cohort.from_records(records)


def conv_layer(rng: np.random.Generator, c_out: int, c_in: int, kernel: int, padding: int = 0,
               stride: int = 1, scale: float = 0.5) -> Layer:
    return Layer(
        kind="conv2d",
        weight=rng.uniform(-scale, scale, size=(c_out, c_in, kernel, kernel)).astype(np.float32),
        bias=rng.uniform(-0.1, 0.1, size=c_out).astype(np.float32),
        stride=stride,
        padding=padding,
    )


def linear_layer(rng: np.random.Generator, out_features: int, in_features: int, scale: float = 0.5) -> Layer:
    return Layer(
        kind="linear",
        weight=rng.uniform(-scale, scale, size=(out_features, in_features)).astype(np.float32),
        bias=rng.uniform(-0.1, 0.1, size=out_features).astype(np.float32),
    )


def random_model(rng: np.random.Generator) -> Model:
    """
    Small conv net: conv -> relu [-> conv -> relu] -> flatten -> linear(1).

    At most 16 filters per conv layer and at most 4 parameterized layers.
    """
    c_in = int(rng.integers(1, 3))
    size = int(rng.integers(5, 7))
    layers: List[Layer] = []
    shape = (c_in, size, size)

    c1 = int(rng.integers(1, 17))
    layers += [conv_layer(rng, c1, c_in, 3, padding=1), Layer(kind="relu")]
    shape = (c1, size, size)
    if rng.random() < 0.5:
        c2 = int(rng.integers(1, 5))
        layers += [conv_layer(rng, c2, c1, 2), Layer(kind="relu")]
        shape = (c2, size - 1, size - 1)
    layers.append(Layer(kind="flatten"))
    layers.append(linear_layer(rng, 1, int(np.prod(shape)), scale=0.2))
    return Model(layers=tuple(layers), input_shape=(c_in, size, size), name="toy")


def random_samples(rng: np.random.Generator, model: Model, n: int, races: Sequence[str] = RACES,
                   labelled: bool = False, shift: float = 0.3) -> SampleSet:
    """
    n samples spread round-robin over races; each race gets a mean shift
    so activations differ by race.
    """
    samples = []
    for k in range(n):
        race_index = k % len(races)
        tensor = rng.uniform(-1.0, 1.0, size=model.input_shape) + shift * race_index
        approach, label = None, None
        if labelled:
            fake = (k // len(races)) % 2 == 1
            approach, label = ("FaceSwap", 1) if fake else (REAL_FACE, 0)
        samples.append(Sample(id=f"s{k:03d}", tensor=tensor.astype(np.float32), race=races[race_index],
                              approach=approach, label=label))
    return SampleSet(samples=tuple(samples))


# --- Loop references -------------------------------------------------------

def reference_conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int) -> np.ndarray:
    """Cross-correlation with explicit loops over filters and output positions, in float64."""
    x = np.asarray(x, dtype=np.float64)
    c_out, c_in, kh, kw = weight.shape
    h, w = x.shape[1], x.shape[2]
    padded = np.zeros((c_in, h + 2 * padding, w + 2 * padding))
    padded[:, padding:padding + h, padding:padding + w] = x
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((c_out, h_out, w_out))
    for o in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                total = float(bias[o])
                for c in range(c_in):
                    for a in range(kh):
                        for b in range(kw):
                            total += padded[c, i * stride + a, j * stride + b] * float(weight[o, c, a, b])
                out[o, i, j] = total
    return out


def reference_conv2d_fast(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int) -> np.ndarray:
    """Same as reference_conv2d but the kernel window product is summed with numpy."""
    x = np.asarray(x, dtype=np.float64)
    c_out, c_in, kh, kw = weight.shape
    h, w = x.shape[1], x.shape[2]
    padded = np.zeros((c_in, h + 2 * padding, w + 2 * padding))
    padded[:, padding:padding + h, padding:padding + w] = x
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((c_out, h_out, w_out))
    weight = weight.astype(np.float64)
    for o in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                window = padded[:, i * stride:i * stride + kh, j * stride:j * stride + kw]
                out[o, i, j] = float(np.sum(window * weight[o])) + float(bias[o])
    return out


def reference_pool(x: np.ndarray, window: int, stride: int, reduce) -> np.ndarray:
    c, h, w = x.shape
    h_out = (h - window) // stride + 1
    w_out = (w - window) // stride + 1
    out = np.zeros((c, h_out, w_out))
    for ch in range(c):
        for i in range(h_out):
            for j in range(w_out):
                values = [float(x[ch, i * stride + a, j * stride + b]) for a in range(window) for b in range(window)]
                out[ch, i, j] = reduce(values)
    return out


def reference_outputs(model: Model, x: np.ndarray) -> List[np.ndarray]:
    """Every layer's output computed with loop references in float64."""
    outputs = []
    x = np.asarray(x, dtype=np.float64)
    for layer in model.layers:
        if layer.kind == "conv2d":
            x = reference_conv2d_fast(x, layer.weight, layer.bias, layer.stride, layer.padding)
        elif layer.kind == "linear":
            x = np.array([
                sum(float(layer.weight[o, i]) * float(x[i]) for i in range(layer.weight.shape[1])) + float(layer.bias[o])
                for o in range(layer.weight.shape[0])
            ])
        elif layer.kind == "relu":
            x = np.where(x > 0, x, 0.0)
        elif layer.kind == "sigmoid":
            x = 1.0 / (1.0 + np.exp(-x))
        elif layer.kind == "flatten":
            x = x.reshape(-1)
        elif layer.kind == "maxpool":
            x = reference_pool(x, layer.window, layer.stride, max)
        elif layer.kind == "avgpool":
            x = reference_pool(x, layer.window, layer.stride, lambda v: sum(v) / len(v))
        else:
            raise ValueError(f"no reference for {layer.kind}")
        outputs.append(x)
    return outputs


def reference_unit_norms(tap: np.ndarray) -> List[float]:
    if tap.ndim == 1:
        return [abs(float(v)) for v in tap]
    return [math.sqrt(sum(float(v) ** 2 for v in channel.reshape(-1))) for channel in tap]


# --- Runner ----------------------------------------------------------------

def run_suite(title: str, tests, logger) -> int:
    """
    Run (name, function) pairs outside pytest and log a summary.

    Returns:
        0 if every test passed, 1 otherwise
    """
    results = []

    for test_name, test_func in tests:
        logger.info(f"\n{'='*50}")
        logger.info(f"Running test: {test_name}")
        logger.info(f"{'='*50}")

        try:
            test_func()
            results.append((test_name, True))
            logger.info(f"✓ {test_name} PASSED")
        except Exception as e:
            logger.error(f"✗ {test_name} FAILED with {type(e).__name__}: {e}")
            results.append((test_name, False))

    logger.info(f"\n{'='*60}")
    logger.info(f"{title} SUMMARY")
    logger.info(f"{'='*60}")

    failed = 0
    for test_name, success in results:
        logger.info(f"{test_name:40} : {'PASSED' if success else 'FAILED'}")
        failed += 0 if success else 1

    logger.info(f"{'='*60}")
    logger.info(f"Total: {len(results)} tests")
    logger.info(f"Passed: {len(results) - failed}")
    logger.info(f"Failed: {failed}")

    if failed == 0:
        logger.info("🎉 All tests passed!")
        return 0
    logger.error("❌ Some tests failed.")
    return 1
