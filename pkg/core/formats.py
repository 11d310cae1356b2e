"""
File formats for FairForge.

All binary formats share one layout: a single line of UTF-8 JSON (the
header or manifest, compact, keys sorted) terminated by a newline byte,
followed by a raw payload. Byte layouts are documented in docs/FORMATS.md.

- FTM: sequential model; payload is every parameter array as
  little-endian float32, concatenated in layer order.
- FTEN: one tensor; payload is little-endian float32.
- Mask sidecar (<model>.mask): payload is one bitset per pruned layer,
  packed most-significant-bit first.
- Sample set: a directory of FTEN files plus manifest.jsonl.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from core.errors import ModelFormatError, RecordValidationError
from models import Layer, Model, PruneMask, REAL_FACE, Sample, SampleSet

logger = logging.getLogger(__name__)

FTM_FORMAT = "FTM"
FTEN_FORMAT = "FTEN"
MASK_FORMAT = "FTMASK"
FORMAT_VERSION = 1
DTYPE = "<f4"
MASK_SUFFIX = ".mask"
MANIFEST_NAME = "manifest.jsonl"

PARAM_ORDER = ("weight", "bias", "mean", "var", "gamma", "beta")

# layer kind -> hyperparameters stored in the manifest
HYPERPARAMETERS = {
    "conv2d": ("stride", "padding"),
    "maxpool": ("window", "stride"),
    "avgpool": ("window", "stride"),
    "batchnorm": ("eps",),
}

PathLike = Union[str, Path]


def _encode_header(header: Dict[str, Any]) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"


def _split_header(data: bytes, expected_format: str, source: str) -> Tuple[Dict[str, Any], bytes]:
    """Split header line from payload and check the format tag."""
    newline = data.find(b"\n")
    if newline < 0:
        raise ModelFormatError(f"{source}: missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"{source}: malformed header ({e})")
    if not isinstance(header, dict):
        raise ModelFormatError(f"{source}: header is not a JSON object")
    if header.get("format") != expected_format:
        raise ModelFormatError(f"{source}: expected format {expected_format}, got {header.get('format')!r}")
    if header.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"{source}: unsupported version {header.get('version')!r}")
    return header, data[newline + 1:]


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _shape(value: Any, source: str) -> Tuple[int, ...]:
    if not isinstance(value, list) or not value or not all(_is_int(d) and d >= 1 for d in value):
        raise ModelFormatError(f"{source}: invalid shape {value!r}")
    return tuple(value)


def _read_array(blob: bytes, entry: Dict[str, Any], source: str) -> np.ndarray:
    """Read one float32 array described by {shape, offset, nbytes}."""
    if not isinstance(entry, dict) or not all(key in entry for key in ("shape", "offset", "nbytes")):
        raise ModelFormatError(f"{source}: incomplete array entry {entry!r}")
    shape = _shape(entry["shape"], source)
    offset, nbytes = entry["offset"], entry["nbytes"]
    if not _is_int(offset) or not _is_int(nbytes):
        raise ModelFormatError(f"{source}: offset and nbytes must be integers, got {offset!r}, {nbytes!r}")
    count = int(np.prod(shape))
    if nbytes != 4 * count:
        raise ModelFormatError(f"{source}: nbytes {nbytes} does not match shape {shape}")
    if offset < 0 or offset + nbytes > len(blob):
        raise ModelFormatError(f"{source}: array at offset {offset} runs past the payload")
    array = np.frombuffer(blob, dtype=DTYPE, count=count, offset=offset).reshape(shape).astype(np.float32)
    if not np.all(np.isfinite(array)):
        raise ModelFormatError(f"{source}: array contains non-finite values")
    return array


# --- FTM models ------------------------------------------------------------

def model_to_bytes(model: Model) -> bytes:
    """Serialize a model to FTM bytes (deterministic)."""
    layers = []
    chunks = []
    offset = 0
    for layer in model.layers:
        entry: Dict[str, Any] = {"kind": layer.kind, "params": {}}
        for name in HYPERPARAMETERS.get(layer.kind, ()):
            value = getattr(layer, name)
            entry[name] = float(value) if name == "eps" else int(value)
        for name, array in layer.arrays().items():
            raw = np.ascontiguousarray(array, dtype=DTYPE).tobytes()
            entry["params"][name] = {"shape": list(array.shape), "offset": offset, "nbytes": len(raw)}
            chunks.append(raw)
            offset += len(raw)
        layers.append(entry)

    manifest = {
        "format": FTM_FORMAT,
        "version": FORMAT_VERSION,
        "name": model.name,
        "model_version": model.version,
        "input_shape": list(model.input_shape),
        "dtype": DTYPE,
        "layers": layers,
    }
    return _encode_header(manifest) + b"".join(chunks)


def _hyperparameter(value: Any, name: str, where: str) -> Union[int, float]:
    """Integers stay integers; eps is a finite non-negative number."""
    if isinstance(value, bool):
        raise ModelFormatError(f"{where}: {name} must be a number, got {value!r}")
    if name == "eps":
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
            raise ModelFormatError(f"{where}: eps must be a finite non-negative number, got {value!r}")
        return float(value)
    if not _is_int(value):
        raise ModelFormatError(f"{where}: {name} must be an integer, got {value!r}")
    return value


def _parse_layer(entry: Any, blob: bytes, where: str) -> Layer:
    if not isinstance(entry, dict) or not isinstance(entry.get("kind"), str):
        raise ModelFormatError(f"{where}: missing or invalid kind")
    extra = sorted(set(entry) - {"kind", "params"} - set(HYPERPARAMETERS.get(entry["kind"], ())))
    if extra:
        raise ModelFormatError(f"{where}: unknown key(s) {extra} for {entry['kind']}")
    kwargs: Dict[str, Any] = {"kind": entry["kind"]}
    for name in HYPERPARAMETERS.get(entry["kind"], ()):
        if name in entry:
            kwargs[name] = _hyperparameter(entry[name], name, where)

    params = entry.get("params", {})
    if not isinstance(params, dict):
        raise ModelFormatError(f"{where}: params is not an object")
    unknown = sorted(set(params) - set(PARAM_ORDER))
    if unknown:
        raise ModelFormatError(f"{where}: unknown parameter(s) {unknown}")
    for name in PARAM_ORDER:
        if name in params:
            kwargs[name] = _read_array(blob, params[name], f"{where} {name}")
    return Layer(**kwargs)


def model_from_bytes(data: bytes, source: str = "<bytes>") -> Model:
    """
    Parse FTM bytes into a validated Model.

    Raises:
        ModelFormatError: For malformed manifests or payloads
        ShapeMismatchError: If the layer chain is inconsistent
    """
    manifest, blob = _split_header(data, FTM_FORMAT, source)
    raw_layers = manifest.get("layers")
    if not isinstance(raw_layers, list):
        raise ModelFormatError(f"{source}: manifest has no layer list")

    layers = []
    for index, entry in enumerate(raw_layers):
        where = f"{source} layer {index}"
        try:
            layers.append(_parse_layer(entry, blob, where))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"{where}: malformed entry ({type(e).__name__}: {e})")

    input_shape = _shape(manifest.get("input_shape"), f"{source} input_shape")
    return Model(
        layers=tuple(layers),
        input_shape=input_shape,
        name=str(manifest.get("name", "model")),
        version=str(manifest.get("model_version", "1")),
    )


def save_model(model: Model, path: PathLike) -> Path:
    path = Path(path)
    path.write_bytes(model_to_bytes(model))
    logger.info(f"Saved model {model.name} to {path}")
    return path


def load_model(path: PathLike) -> Model:
    """Load an FTM model file."""
    path = Path(path)
    model = model_from_bytes(path.read_bytes(), str(path))
    logger.info(f"Loaded model {model.name} ({len(model)} layers) from {path}")
    return model


# --- FTEN tensors ----------------------------------------------------------

def tensor_to_bytes(tensor: np.ndarray) -> bytes:
    tensor = np.asarray(tensor)
    header = {"format": FTEN_FORMAT, "version": FORMAT_VERSION, "shape": list(tensor.shape), "dtype": DTYPE}
    return _encode_header(header) + np.ascontiguousarray(tensor, dtype=DTYPE).tobytes()


def tensor_from_bytes(data: bytes, source: str = "<bytes>") -> np.ndarray:
    header, blob = _split_header(data, FTEN_FORMAT, source)
    if header.get("dtype", DTYPE) != DTYPE:
        raise ModelFormatError(f"{source}: unsupported dtype {header.get('dtype')!r}")
    shape = _shape(header.get("shape"), source)
    count = int(np.prod(shape))
    if len(blob) != 4 * count:
        raise ModelFormatError(f"{source}: payload has {len(blob)} bytes, shape {shape} needs {4 * count}")
    return _read_array(blob, {"shape": list(shape), "offset": 0, "nbytes": 4 * count}, source)


def save_tensor(tensor: np.ndarray, path: PathLike) -> Path:
    path = Path(path)
    path.write_bytes(tensor_to_bytes(tensor))
    return path


def load_tensor(path: PathLike) -> np.ndarray:
    path = Path(path)
    return tensor_from_bytes(path.read_bytes(), str(path))


# --- Mask sidecars ---------------------------------------------------------

def mask_path_for(model_path: PathLike) -> Path:
    """Sidecar path of a model file: <model>.mask"""
    model_path = Path(model_path)
    return model_path.with_name(model_path.name + MASK_SUFFIX)


def mask_to_bytes(mask: PruneMask) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for index in sorted(mask.layers):
        bits = np.asarray(mask.layers[index], dtype=bool)
        raw = np.packbits(bits.reshape(-1)).tobytes()
        entries.append({
            "index": int(index),
            "shape": list(bits.shape),
            "offset": offset,
            "nbytes": len(raw),
            "pruned": int(bits.sum()),
        })
        chunks.append(raw)
        offset += len(raw)
    header = {
        "format": MASK_FORMAT,
        "version": FORMAT_VERSION,
        "method": mask.method,
        "rate": float(mask.rate),
        "layers": entries,
    }
    return _encode_header(header) + b"".join(chunks)


def mask_from_bytes(data: bytes, source: str = "<bytes>") -> PruneMask:
    header, blob = _split_header(data, MASK_FORMAT, source)
    rate, entries = header.get("rate", 0.0), header.get("layers", [])
    if isinstance(rate, bool) or not isinstance(rate, (int, float)) or not 0.0 <= rate < 1.0:
        raise ModelFormatError(f"{source}: invalid rate {rate!r}")
    if not isinstance(entries, list):
        raise ModelFormatError(f"{source}: layers is not a list")
    mask = PruneMask(method=str(header.get("method")), rate=float(rate))
    for entry in entries:
        if not isinstance(entry, dict) or not all(_is_int(entry.get(key)) for key in ("index", "offset", "nbytes")):
            raise ModelFormatError(f"{source}: incomplete layer entry {entry!r}")
        index, offset, nbytes = entry["index"], entry["offset"], entry["nbytes"]
        shape = _shape(entry.get("shape"), source)
        count = int(np.prod(shape))
        if nbytes != (count + 7) // 8 or offset < 0 or offset + nbytes > len(blob):
            raise ModelFormatError(f"{source}: bitset of layer {index} is out of bounds")
        packed = np.frombuffer(blob, dtype=np.uint8, count=nbytes, offset=offset)
        bits = np.unpackbits(packed, count=count).astype(bool).reshape(shape)
        if "pruned" in entry and entry["pruned"] != int(bits.sum()):
            raise ModelFormatError(f"{source}: pruned count of layer {index} does not match its bitset")
        mask.layers[index] = bits
    return mask


def save_mask(mask: PruneMask, path: PathLike) -> Path:
    path = Path(path)
    path.write_bytes(mask_to_bytes(mask))
    logger.info(f"Saved {mask} to {path}")
    return path


def load_mask(path: PathLike) -> PruneMask:
    path = Path(path)
    return mask_from_bytes(path.read_bytes(), str(path))


# --- Sample sets -----------------------------------------------------------

def _parse_manifest_line(line: str, line_number: int) -> Dict[str, Any]:
    try:
        entry = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordValidationError(f"malformed JSON ({e.msg})", line_number)
    if not isinstance(entry, dict):
        raise RecordValidationError("expected a JSON object", line_number)
    for name in ("id", "file", "race"):
        if not isinstance(entry.get(name), str):
            raise RecordValidationError(f"field '{name}' must be a string", line_number)

    approach, label = entry.get("approach"), entry.get("label")
    if approach is not None and not isinstance(approach, str):
        raise RecordValidationError("field 'approach' must be a string", line_number)
    if label is not None and (isinstance(label, bool) or label not in (0, 1)):
        raise RecordValidationError("field 'label' must be 0 or 1", line_number)
    if approach is not None and label is not None and (label == 0) != (approach == REAL_FACE):
        raise RecordValidationError(f"label {label} inconsistent with approach '{approach}'", line_number)
    return entry


def load_sample_set(directory: PathLike, manifest: str = MANIFEST_NAME) -> SampleSet:
    """
    Load a directory of FTEN tensors described by a JSONL manifest.

    Each manifest line is {"id", "file", "race"} with optional "approach"
    and "label"; "file" is relative to the directory.

    Raises:
        RecordValidationError: For invalid manifest lines
        ModelFormatError: For unreadable tensor files
    """
    directory = Path(directory)
    manifest_path = directory / manifest
    samples: List[Sample] = []
    with open(manifest_path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            entry = _parse_manifest_line(line, line_number)
            samples.append(Sample(
                id=entry["id"],
                tensor=load_tensor(directory / entry["file"]),
                race=entry["race"],
                approach=entry.get("approach"),
                label=entry.get("label"),
            ))
    sample_set = SampleSet(samples=tuple(samples))
    logger.info(f"Loaded {len(sample_set)} samples ({len(sample_set.races)} races) from {directory}")
    return sample_set


def save_sample_set(sample_set: SampleSet, directory: PathLike, manifest: str = MANIFEST_NAME) -> Path:
    """Write tensors as <id>.ften plus the manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for sample in sample_set.samples:
        filename = f"{sample.id}.ften"
        save_tensor(sample.tensor, directory / filename)
        entry: Dict[str, Any] = {"id": sample.id, "file": filename, "race": sample.race}
        if sample.approach is not None:
            entry["approach"] = sample.approach
        if sample.label is not None:
            entry["label"] = sample.label
        lines.append(json.dumps(entry))
    (directory / manifest).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return directory
