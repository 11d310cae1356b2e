"""
Prediction log ingestion for FairForge.

This module parses JSONL prediction logs into a Cohort, validating every
line, and tallies confusion counts per (race, approach) cell.

Record format, one JSON object per line:
    {"id": str, "score": float, "label": 0|1, "race": str, "approach": str}
"""
import json
import logging
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from core.errors import RecordValidationError, ThresholdPlanError
from models import Cohort, CellCounts, PredictionRecord, REAL_FACE

logger = logging.getLogger(__name__)

RECORD_FIELDS = ("id", "score", "label", "race", "approach")

Threshold = Union[float, Mapping[str, float]]


def _parse_line(line: str, line_number: int) -> PredictionRecord:
    """Validate one JSONL line and build its record."""
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordValidationError(f"malformed JSON ({e.msg})", line_number)

    if not isinstance(data, dict):
        raise RecordValidationError("expected a JSON object", line_number)

    missing = [name for name in RECORD_FIELDS if name not in data]
    if missing:
        raise RecordValidationError(f"missing field(s): {', '.join(missing)}", line_number)

    extra = sorted(set(data) - set(RECORD_FIELDS))
    if extra:
        logger.warning(f"line {line_number}: ignoring unknown key(s) {extra}")

    for name in ("id", "race", "approach"):
        if not isinstance(data[name], str):
            raise RecordValidationError(f"field '{name}' must be a string", line_number)

    score = data["score"]
    if isinstance(score, bool) or not isinstance(score, (int, float)):
        raise RecordValidationError("field 'score' must be a number", line_number)
    score = float(score)
    if not np.isfinite(score) or not 0.0 <= score <= 1.0:
        raise RecordValidationError(f"score {score} outside [0, 1]", line_number)

    label = data["label"]
    if isinstance(label, bool) or not isinstance(label, int) or label not in (0, 1):
        raise RecordValidationError("field 'label' must be 0 or 1", line_number)

    approach = data["approach"]
    if (label == 0) != (approach == REAL_FACE):
        raise RecordValidationError(
            f"label {label} inconsistent with approach '{approach}' "
            f"(label 0 if and only if approach is '{REAL_FACE}')",
            line_number,
        )

    return PredictionRecord(id=data["id"], score=score, label=label, race=data["race"], approach=approach)


def parse_records(stream: Iterable[str]) -> Cohort:
    """
    Parse a JSONL prediction log.

    Blank lines are skipped; line numbers in errors are 1-based.

    Args:
        stream: Lines of text (a file object or a list of strings)

    Returns:
        Cohort with records in file order

    Raises:
        RecordValidationError: On the first invalid line
    """
    records = []
    for line_number, line in enumerate(stream, 1):
        if not line.strip():
            continue
        records.append(_parse_line(line, line_number))

    cohort = Cohort.from_records(records)
    logger.info(f"Parsed {len(cohort)} records: {len(cohort.races)} races, {len(cohort.approaches)} approaches")
    return cohort


def dump_records(cohort: Cohort) -> str:
    """Serialize a cohort back to JSONL text."""
    lines = [
        json.dumps({"id": r.id, "score": r.score, "label": r.label, "race": r.race, "approach": r.approach})
        for r in cohort.records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def record_thresholds(cohort: Cohort, threshold: Threshold) -> np.ndarray:
    """
    Threshold for every record, from a global value or a per-race map.

    Raises:
        ThresholdPlanError: If a race is missing or a threshold is out of range
    """
    if isinstance(threshold, Mapping):
        missing = [race for race in cohort.races if race not in threshold]
        if missing:
            raise ThresholdPlanError(f"no threshold for race(s): {', '.join(missing)}")
        for race, value in threshold.items():
            if not 0.0 <= float(value) <= 1.0:
                raise ThresholdPlanError(f"threshold {value} for race '{race}' outside [0, 1]")
        return np.array([float(threshold[r.race]) for r in cohort.records], dtype=np.float64)

    threshold = float(threshold)
    if not 0.0 <= threshold <= 1.0:
        raise ThresholdPlanError(f"threshold {threshold} outside [0, 1]")
    return np.full(len(cohort.records), threshold, dtype=np.float64)


def group_cells(cohort: Cohort, threshold: Threshold) -> Dict[Tuple[str, str], CellCounts]:
    """
    Confusion counts per (race, approach) cell.

    A record is predicted fake iff score >= its threshold. Every pair of
    the cohort's races x approaches appears once, empty cells as zeros.

    Args:
        cohort: Prediction log
        threshold: Global threshold or race -> threshold map

    Returns:
        Map (race, approach) -> CellCounts
    """
    thresholds = record_thresholds(cohort, threshold)
    cells = {(race, approach): CellCounts() for race in cohort.races for approach in cohort.approaches}
    for record, t in zip(cohort.records, thresholds):
        cells[(record.race, record.approach)].add(record.label, record.score >= t)
    return cells
