#!/usr/bin/env python3
"""
Property tests for the fairness metrics.

Random cohorts are drawn with hypothesis; each test states a relation
the metric families must satisfy for every cohort.
"""
import logging
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

# Add the current directory to Python path for imports
sys.path.insert(0, str(Path(__file__).parent))

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)

from core.errors import DegenerateUtility
from core.metrics import approach_averaged_metrics, auc, evaluate, naive_metrics
from core.records import group_cells
from models import AA_KEYS, Cohort, PredictionRecord, REAL_FACE, UR_KEYS
from testkit import cohort_from_cells, run_suite

RACE_NAMES = ("Caucasian", "Asian", "African", "Indian")
FAKE_NAMES = ("DeepFakes", "Face2Face", "FaceSwap")
SCORES = st.sampled_from([k / 20 for k in range(21)])

PROPERTY_SETTINGS = settings(max_examples=200, deadline=None)


@st.composite
def cohorts(draw, equal_counts: bool = False, max_fakes: int = 3):
    """Cohorts with every (race, approach) cell non-empty."""
    n_races = draw(st.integers(min_value=2, max_value=4))
    n_fakes = draw(st.integers(min_value=1, max_value=max_fakes))
    size = draw(st.integers(min_value=1, max_value=6))
    cells = {}
    for race in RACE_NAMES[:n_races]:
        for approach in (REAL_FACE,) + FAKE_NAMES[:n_fakes]:
            n = size if equal_counts else draw(st.integers(min_value=1, max_value=6))
            cells[(race, approach)] = draw(st.lists(SCORES, min_size=n, max_size=n))
    return cohort_from_cells(cells)


def _relabel(cohort: Cohort, mapping) -> Cohort:
    return Cohort.from_records(
        PredictionRecord(id=r.id, score=r.score, label=r.label, race=mapping[r.race], approach=r.approach)
        for r in cohort.records
    )


@PROPERTY_SETTINGS
@given(cohort=cohorts(), data=st.data())
def test_race_relabeling_invariance(cohort, data):
    """Renaming races (and so reordering them) leaves every metric unchanged."""
    shuffled = data.draw(st.permutations(list(cohort.races)))
    mapping = {race: f"group-{name}" for race, name in zip(cohort.races, shuffled)}
    relabeled = _relabel(cohort, mapping)

    for metrics in (naive_metrics, approach_averaged_metrics):
        original, renamed = metrics(cohort), metrics(relabeled)
        assert renamed == pytest.approx(original, abs=1e-12)
    assert auc(relabeled) == auc(cohort)


@PROPERTY_SETTINGS
@given(cohort=cohorts())
def test_duplication_invariance(cohort):
    """Duplicating every record changes counts, not rates."""
    doubled = Cohort.from_records(
        list(cohort.records) + [
            PredictionRecord(id=r.id + "-copy", score=r.score, label=r.label, race=r.race, approach=r.approach)
            for r in cohort.records
        ]
    )
    assert naive_metrics(doubled) == naive_metrics(cohort)
    assert approach_averaged_metrics(doubled) == approach_averaged_metrics(cohort)
    assert auc(doubled) == pytest.approx(auc(cohort), abs=1e-12)


@PROPERTY_SETTINGS
@given(cohort=cohorts())
def test_utility_regularization_never_shrinks(cohort):
    try:
        report = evaluate(cohort, 0.5)
    except DegenerateUtility:
        # some approach is never classified correctly
        return
    for aa_key, ur_key in zip(AA_KEYS, UR_KEYS):
        assert report.metric(ur_key) >= report.metric(aa_key) - 1e-12
    assert all(value >= 0.0 for value in report.fairness_values())


@PROPERTY_SETTINGS
@given(cohort=cohorts(max_fakes=1))
def test_single_fake_approach_deo(cohort):
    assert naive_metrics(cohort)["deo"] == approach_averaged_metrics(cohort)["aadeo"]


@PROPERTY_SETTINGS
@given(cohort=cohorts(equal_counts=True))
def test_averaging_bounds_pooling(cohort):
    """With equal cell sizes, per-approach averaging can only reveal more bias than pooling."""
    naive = naive_metrics(cohort)
    aa = approach_averaged_metrics(cohort)
    assert aa["aadpd"] >= naive["dpd"] - 1e-12
    assert aa["aastd"] >= naive["std"] - 1e-12


@PROPERTY_SETTINGS
@given(data=st.data())
def test_identical_races_are_fair(data):
    n_races = data.draw(st.integers(min_value=2, max_value=4))
    per_approach = {
        approach: data.draw(st.lists(SCORES, min_size=1, max_size=5))
        for approach in (REAL_FACE, "FaceSwap", "NeuralTextures")
    }
    cohort = cohort_from_cells({
        (race, approach): scores for race in RACE_NAMES[:n_races] for approach, scores in per_approach.items()
    })
    assert all(abs(value) < 1e-12 for value in naive_metrics(cohort).values())
    assert all(abs(value) < 1e-12 for value in approach_averaged_metrics(cohort).values())


@PROPERTY_SETTINGS
@given(cohort=cohorts(), threshold=SCORES)
def test_group_cells_partition(cohort, threshold):
    cells = group_cells(cohort, threshold)
    assert len(cells) == len(cohort.races) * len(cohort.approaches)
    assert sum(c.size for c in cells.values()) == len(cohort)
    for (race, approach), counts in cells.items():
        expected = sum(1 for r in cohort.records if r.race == race and r.approach == approach)
        assert counts.size == expected
        if approach == REAL_FACE:
            assert counts.tp == counts.fn == 0
        else:
            assert counts.tn == counts.fp == 0


def main():
    """Run all property tests."""
    logger.info("Starting FairForge property tests...")

    tests = [
        ("Race Relabeling", test_race_relabeling_invariance),
        ("Duplication", test_duplication_invariance),
        ("UR >= AA", test_utility_regularization_never_shrinks),
        ("Single Fake DEO", test_single_fake_approach_deo),
        ("Averaging Bounds", test_averaging_bounds_pooling),
        ("Identical Races", test_identical_races_are_fair),
        ("Cell Partition", test_group_cells_partition),
    ]
    return run_suite("PROPERTIES", tests, logger)


if __name__ == "__main__":
    sys.exit(main())
