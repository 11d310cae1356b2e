#!/usr/bin/env python3
"""
Tests for the FairForge evaluation core.

Covers record ingestion, cell grouping, the three metric families against
hand-computed and published oracle values, per-race threshold search,
report rendering and configuration.
"""
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add the current directory to Python path for imports
sys.path.insert(0, str(Path(__file__).parent))

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)

from core.config import Config, THREADS_ENV
from core.errors import DegenerateCohort, DegenerateUtility, FairForgeError, RecordValidationError, ThresholdPlanError
from core.metrics import (
    approach_averaged_metrics, auc, evaluate, naive_metrics, pairwise_gap, utility_regularized_metrics,
)
from core.records import dump_records, group_cells, parse_records
from core.report import make_bundle, parse_bundle, rank, render
from core.synth import from_accuracy_spec
from core.thresholds import (
    accuracy_at, evaluate_with_plan, optimal_threshold, plan_thresholds, score_histogram, threshold_candidates,
)
from models import AccuracySpec, Cohort, FAIRNESS_KEYS, REAL_FACE, ThresholdPlan
from testkit import TABLE6_BEST, TABLE6_FIXED, cohort_from_cells, record, run_suite


def _line(rid="r1", score=0.7, label=1, race="A", approach="FaceSwap", **extra):
    data = {"id": rid, "score": score, "label": label, "race": race, "approach": approach}
    data.update(extra)
    return json.dumps(data)


def _table6(accuracy):
    return from_accuracy_spec(AccuracySpec(accuracy=accuracy, n_per_cell=10000))


# --- records ---------------------------------------------------------------

def test_parse_records_valid_lines():
    """Two valid lines give a two-record cohort with both races."""
    cohort = parse_records([_line("a", race="A"), "", _line("b", score=0.1, label=0, race="B", approach=REAL_FACE)])

    assert len(cohort) == 2
    assert cohort.races == ("A", "B")
    assert cohort.approaches == (REAL_FACE, "FaceSwap")
    assert cohort.records[0].id == "a"
    logger.info(f"✓ Parsed cohort: {cohort.races} / {cohort.approaches}")


def test_parse_records_rejects_invalid_lines():
    """Bound, consistency and type violations name the offending line."""
    with pytest.raises(RecordValidationError) as info:
        parse_records([_line(score=1.3)])
    assert info.value.line_number == 1
    assert "line 1" in str(info.value)

    with pytest.raises(RecordValidationError):
        parse_records([_line(label=1, approach=REAL_FACE)])

    with pytest.raises(RecordValidationError) as info:
        parse_records([_line(), "{not json"])
    assert info.value.line_number == 2

    with pytest.raises(RecordValidationError):
        parse_records([_line(label=True)])

    with pytest.raises(RecordValidationError):
        parse_records([_line(race=3)])

    with pytest.raises(RecordValidationError):
        parse_records([json.dumps({"id": "x", "score": 0.5})])
    logger.info("✓ Invalid lines rejected with line numbers")


def test_parse_records_ignores_unknown_keys():
    cohort = parse_records([_line(frame=12)])
    assert len(cohort) == 1
    assert dump_records(cohort).count("frame") == 0
    logger.info("✓ Unknown keys ignored")


def test_group_cells_threshold_rule():
    """Predicted fake iff score >= threshold."""
    cohort = cohort_from_cells({("A", "FaceSwap"): [0.7], ("B", REAL_FACE): [0.2]})

    assert group_cells(cohort, 0.5)[("A", "FaceSwap")].tp == 1
    assert group_cells(cohort, 0.7)[("A", "FaceSwap")].tp == 1
    assert group_cells(cohort, 0.71)[("A", "FaceSwap")].fn == 1
    logger.info("✓ Boundary score counts as fake")


def test_group_cells_hand_tally():
    cohort = cohort_from_cells({
        ("A", "FaceSwap"): [0.9, 0.3],
        ("A", REAL_FACE): [0.6],
        ("B", REAL_FACE): [0.1],
    })
    cells = group_cells(cohort, 0.5)

    assert len(cells) == 4
    assert (cells[("A", "FaceSwap")].tp, cells[("A", "FaceSwap")].fn) == (1, 1)
    assert cells[("A", REAL_FACE)].fp == 1
    assert cells[("B", REAL_FACE)].tn == 1
    assert cells[("B", "FaceSwap")].size == 0
    assert sum(c.size for c in cells.values()) == len(cohort)
    logger.info("✓ Cell counts match hand tally")


def test_group_cells_per_race_thresholds():
    cohort = cohort_from_cells({("A", "FaceSwap"): [0.6], ("B", "FaceSwap"): [0.6]})
    cells = group_cells(cohort, {"A": 0.5, "B": 0.7})
    assert cells[("A", "FaceSwap")].tp == 1
    assert cells[("B", "FaceSwap")].fn == 1

    with pytest.raises(ThresholdPlanError):
        group_cells(cohort, {"A": 0.5})
    logger.info("✓ Per-race thresholds applied")


# --- metrics ---------------------------------------------------------------

def test_pairwise_gap():
    assert pairwise_gap({"A": 0.2, "B": 0.5, "C": 0.3}) == pytest.approx(0.3)
    assert pairwise_gap({"A": 0.4, "B": 0.4}) == 0.0
    tpr = {"Caucasian": 0.7764, "Asian": 0.7365, "African": 0.6289, "Indian": 0.6801}
    assert pairwise_gap(tpr) == pytest.approx(0.1475, abs=1e-9)

    with pytest.raises(DegenerateCohort):
        pairwise_gap({"A": 0.5})
    logger.info("✓ Pairwise gap")


def test_table_threshold_half_oracle():
    """Published accuracies at threshold 0.5 reproduce the published metric row."""
    report = evaluate(_table6(TABLE6_FIXED), 0.5)

    expected = {
        "aadpd": 0.1274, "aadeodds": 0.1274, "aadeo": 0.1300, "aastd": 0.0501,
        "urdpd": 0.1551, "urdeodds": 0.1551, "urdeo": 0.1507, "urstd": 0.0607,
    }
    for key, value in expected.items():
        assert report.metric(key) == pytest.approx(value, abs=5e-4), key

    assert report.naive["deo"] == pytest.approx(0.1300, abs=5e-4)
    assert report.naive["deodds"] == pytest.approx(0.1274, abs=5e-4)
    assert report.naive["dpd"] == pytest.approx(0.1265, abs=5e-4)
    assert report.per_approach[REAL_FACE]["std_acc"] == pytest.approx(0.0450, abs=5e-5)
    assert report.per_approach["FaceSwap"]["acc_gap"] == pytest.approx(0.1300, abs=1e-9)
    logger.info(f"✓ Threshold-0.5 row: {report.approach_averaged} {report.utility_regularized}")


def test_table_best_threshold_oracle():
    """Accuracies under per-race optimal thresholds reproduce the AA values."""
    report = evaluate(_table6(TABLE6_BEST), 0.5)

    assert report.metric("aadpd") == pytest.approx(0.0544, abs=5e-4)
    assert report.metric("aadeo") == pytest.approx(0.0892, abs=5e-4)
    assert report.metric("aastd") == pytest.approx(0.0220, abs=5e-4)
    # utility regularization can only inflate when every ACC_f <= 1
    for aa_key, ur_key in zip(FAIRNESS_KEYS[4:8], FAIRNESS_KEYS[8:]):
        assert report.metric(ur_key) >= report.metric(aa_key)

    # UR terms divide by ACC_f, the race mean of each approach's accuracies
    real = np.array(list(TABLE6_BEST[REAL_FACE].values()))
    fake = np.array(list(TABLE6_BEST["FaceSwap"].values()))
    assert fake.mean() == pytest.approx(0.794625, abs=1e-12)
    real_gap, fake_gap = np.ptp(real) / real.mean(), np.ptp(fake) / fake.mean()
    assert report.metric("urdeo") == pytest.approx(fake_gap, abs=1e-9)
    assert report.metric("urdpd") == pytest.approx((real_gap + fake_gap) / 2, abs=1e-9)
    assert report.metric("urdeodds") == pytest.approx((real_gap + fake_gap) / 2, abs=1e-9)
    assert report.metric("urstd") == pytest.approx((real.std() / real.mean() + fake.std() / fake.mean()) / 2,
                                                   abs=1e-9)
    assert report.metric("urdeo") == pytest.approx(0.11225, abs=5e-5)
    assert report.metric("urdpd") == pytest.approx(0.06725, abs=5e-5)
    assert report.metric("urstd") == pytest.approx(0.02724, abs=5e-5)
    logger.info(f"✓ Best-threshold row: {report.approach_averaged} {report.utility_regularized}")


def test_identical_confusion_rates_give_zero():
    scores = [0.9, 0.2, 0.7]
    cohort = cohort_from_cells({
        ("A", REAL_FACE): [0.1, 0.6], ("B", REAL_FACE): [0.1, 0.6],
        ("A", "FS"): scores, ("B", "FS"): scores,
        ("A", "NT"): [0.4, 0.7], ("B", "NT"): [0.4, 0.7],
    })
    report = evaluate(cohort, 0.5)
    assert report.fairness_values() == [0.0] * 12
    logger.info("✓ Symmetric cohort is perfectly fair")


def test_single_approach_equal_gaps():
    """One fake approach plus RealFace with identical gaps g: aadpd = aadeodds = g."""
    cohort = cohort_from_cells({
        ("A", REAL_FACE): [0.9, 0.1, 0.1, 0.1], ("B", REAL_FACE): [0.1, 0.1, 0.1, 0.1],
        ("A", "FS"): [0.9, 0.9, 0.9, 0.9], ("B", "FS"): [0.9, 0.9, 0.9, 0.1],
    })
    aa = approach_averaged_metrics(cohort)
    assert aa["aadpd"] == pytest.approx(0.25)
    assert aa["aadeodds"] == pytest.approx(0.25)
    assert naive_metrics(cohort)["deo"] == aa["aadeo"]
    logger.info("✓ Two-element averages")


def test_unit_accuracy_makes_ur_equal_aa():
    cohort = cohort_from_cells({
        ("A", REAL_FACE): [0.1], ("B", REAL_FACE): [0.2],
        ("A", "FS"): [0.9], ("B", "FS"): [0.8],
    })
    aa = approach_averaged_metrics(cohort)
    ur = utility_regularized_metrics(cohort)
    assert [ur[k] for k in ("urdpd", "urdeodds", "urdeo", "urstd")] == \
        [aa[k] for k in ("aadpd", "aadeodds", "aadeo", "aastd")]
    logger.info("✓ UR == AA at accuracy 1")


def test_degenerate_cohorts():
    with pytest.raises(DegenerateCohort):
        evaluate(parse_records([]), 0.5)

    one_race = cohort_from_cells({("A", REAL_FACE): [0.1], ("A", "FS"): [0.9]})
    with pytest.raises(DegenerateCohort):
        evaluate(one_race, 0.5)

    # approach FS has no records for race B
    missing = cohort_from_cells({
        ("A", REAL_FACE): [0.1], ("B", REAL_FACE): [0.1],
        ("A", "FS"): [0.9], ("C", REAL_FACE): [0.2], ("C", "FS"): [0.8],
    })
    with pytest.raises(DegenerateCohort):
        evaluate(missing, 0.5)
    report = evaluate(missing, 0.5, skip_missing=True)
    assert report.per_approach["FS"]["gap_pos"] == 0.0

    # every FS record misclassified: ACC_FS = 0
    zero_acc = cohort_from_cells({
        ("A", REAL_FACE): [0.1], ("B", REAL_FACE): [0.1],
        ("A", "FS"): [0.2], ("B", "FS"): [0.3],
    })
    with pytest.raises(DegenerateUtility):
        evaluate(zero_acc, 0.5)
    logger.info("✓ Degenerate cohorts rejected")


def test_auc_examples():
    perfect = cohort_from_cells({("A", "FS"): [0.8, 0.9], ("B", REAL_FACE): [0.1]})
    assert auc(perfect) == 1.0

    ties = cohort_from_cells({("A", "FS"): [0.5, 0.5], ("B", REAL_FACE): [0.5, 0.5]})
    assert auc(ties) == 0.5

    with pytest.raises(DegenerateCohort):
        auc(cohort_from_cells({("A", "FS"): [0.5]}))
    logger.info("✓ AUC examples")


def test_auc_matches_pairwise_count():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 20))
        scores = np.round(rng.random(n), 1)
        labels = rng.integers(0, 2, n)
        labels[0], labels[1] = 0, 1
        cohort = Cohort.from_records(
            record(f"r{k}", float(s), "A" if k % 2 else "B", "FS" if y else REAL_FACE)
            for k, (s, y) in enumerate(zip(scores, labels))
        )
        pos = [s for s, y in zip(scores, labels) if y == 1]
        neg = [s for s, y in zip(scores, labels) if y == 0]
        wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
        assert auc(cohort) == wins / (len(pos) * len(neg))
    logger.info("✓ AUC equals pairwise count on 100 cohorts")


def test_evaluate_fills_breakdowns():
    report = evaluate(_table6(TABLE6_FIXED), 0.5)
    assert set(report.per_race) == {"Caucasian", "Asian", "African", "Indian"}
    assert report.per_race["Caucasian"]["tnr"] == pytest.approx(0.7960)
    assert report.per_race["Caucasian"]["tpr"] == pytest.approx(0.8910)
    assert report.accuracy_table["FaceSwap"]["African"] == pytest.approx(0.7668)
    assert report.threshold_used == 0.5
    assert report.utility["auc"] > 0.5
    logger.info("✓ Breakdowns populated")


# --- thresholds ------------------------------------------------------------

def test_optimal_threshold_examples():
    assert optimal_threshold([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == (0.5, 1.0)
    assert optimal_threshold([0.4] * 4, [0, 1, 0, 1]) == (0.0, 0.5)
    with pytest.raises(DegenerateCohort):
        optimal_threshold([0.2, 0.3], [1, 1])
    logger.info("✓ Threshold search examples")


def test_optimal_threshold_matches_exhaustive_search():
    rng = np.random.default_rng(11)
    for _ in range(20):
        scores = np.round(rng.random(50), 2)
        labels = rng.integers(0, 2, 50)
        labels[:2] = [0, 1]

        distinct = sorted(set(scores.tolist()))
        candidates = sorted({0.0, 1.0} | {(a + b) / 2 for a, b in zip(distinct, distinct[1:])})
        best_t, best_acc = None, -1.0
        for t in candidates:
            acc = sum(int(s >= t) == y for s, y in zip(scores, labels)) / len(scores)
            if acc > best_acc:
                best_t, best_acc = t, acc

        t, acc = optimal_threshold(scores, labels)
        assert t == pytest.approx(best_t)
        assert acc == pytest.approx(best_acc)
        assert acc >= accuracy_at(scores, labels, 0.5)
    logger.info("✓ Threshold search matches brute force")


def test_threshold_candidates_separate_adjacent_scores():
    lower = 0.3
    upper = np.nextafter(lower, 1.0)
    candidates = threshold_candidates([lower, upper])
    assert upper in candidates
    logger.info("✓ Midpoint rounding handled")


def test_score_histogram():
    cohort = cohort_from_cells({("A", "FS"): [0.25] * 4, ("B", "FS"): [1.0]})
    histogram = score_histogram(cohort, bins=4)
    assert histogram["A"].tolist() == [0, 4, 0, 0]
    assert score_histogram(cohort, bins=10)["B"][9] == 1

    grid = cohort_from_cells({("A", "FS"): [(k + 0.5) / 100 for k in range(100)], ("B", "FS"): [0.5]})
    assert score_histogram(grid, bins=10)["A"].tolist() == [10] * 10
    logger.info("✓ Histogram binning")


def test_constant_plan_matches_fixed_threshold():
    cohort = _table6(TABLE6_FIXED)
    plan = ThresholdPlan(per_race={race: 0.5 for race in cohort.races})
    with_plan = evaluate_with_plan(cohort, plan)
    fixed = evaluate(cohort, 0.5)
    assert with_plan.fairness_values() == fixed.fairness_values()
    assert with_plan.utility == fixed.utility

    with pytest.raises(ThresholdPlanError):
        evaluate_with_plan(cohort, ThresholdPlan(per_race={"Caucasian": 0.5}))
    logger.info("✓ Constant plan is bitwise identical")


def test_plan_beats_best_global_threshold():
    rng = np.random.default_rng(3)
    for _ in range(10):
        cells = {}
        for race, shift in (("A", 0.0), ("B", 0.2), ("C", -0.1)):
            cells[(race, REAL_FACE)] = np.clip(rng.normal(0.35 + shift, 0.15, 15), 0, 1).round(3)
            cells[(race, "FS")] = np.clip(rng.normal(0.6 + shift, 0.15, 15), 0, 1).round(3)
        cohort = cohort_from_cells(cells)

        plan = plan_thresholds(cohort, max_workers=2)
        planned_acc = evaluate_with_plan(cohort, plan, skip_missing=True).utility["acc"]
        _, global_acc = optimal_threshold([r.score for r in cohort.records], [r.label for r in cohort.records])
        assert planned_acc >= global_acc - 1e-12
        assert set(plan.search_trace) == set(cohort.races)
    logger.info("✓ Per-race plan never loses to a global threshold")


# --- report ----------------------------------------------------------------

def test_render_markdown_shape():
    report = evaluate(_table6(TABLE6_FIXED), 0.5)
    text = render(make_bundle({"xception": report}), "markdown")
    rows = text.strip().splitlines()[2:]
    assert len(rows) == 13
    assert rows[0].startswith("| Naive | DPD |")
    assert "| Utility | AUC |" in rows[-1]
    assert "0.1274" in text
    logger.info("✓ Markdown table has 13 metric rows")


def test_rankings_and_json_round_trip():
    fair = evaluate(_table6(TABLE6_BEST), 0.5)
    unfair = evaluate(_table6(TABLE6_FIXED), 0.5)
    bundle = make_bundle({"unfair": unfair, "fair": fair})

    assert bundle.rankings["aadpd"] == ["fair", "unfair"]
    assert bundle.rankings["auc"][0] in ("fair", "unfair")
    assert all(sorted(names) == ["fair", "unfair"] for names in bundle.rankings.values())

    parsed = parse_bundle(render(bundle, "json"))
    assert parsed == bundle
    assert json.loads(render(bundle, "json"))["schema_version"] == 1

    csv_lines = render(bundle, "csv").strip().splitlines()
    assert len(csv_lines) == 3
    assert csv_lines[0].startswith("run,dpd,deodds")
    logger.info("✓ Rankings and JSON round trip")


def test_rank_ties_and_singletons():
    report = evaluate(_table6(TABLE6_FIXED), 0.5)
    bundle = make_bundle({"b": report, "a": report, "c": report})
    assert rank(bundle)["dpd"] == ["a", "b", "c"]
    assert rank(make_bundle({"only": report}))["urstd"] == ["only"]

    with pytest.raises(FairForgeError):
        render(make_bundle({}), "markdown")
    logger.info("✓ Ties broken by name")


# --- config ----------------------------------------------------------------

def test_config_defaults_and_thread_cap():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "settings.yaml"
        path.write_text("runtime:\n  threads: 8\nreport:\n  decimals:\n", encoding="utf-8")

        previous = os.environ.pop(THREADS_ENV, None)
        try:
            config = Config(str(path))
            assert config.threads == 8
            assert config.decimals == 4
            assert config.threshold == 0.5
            assert len(config.default_rates) == 7

            os.environ[THREADS_ENV] = "2"
            assert config.threads == 2
            os.environ[THREADS_ENV] = "16"
            assert config.threads == 8
        finally:
            os.environ.pop(THREADS_ENV, None)
            if previous is not None:
                os.environ[THREADS_ENV] = previous

        config.set("evaluation.threshold", 0.6)
        config.save()
        assert Config(str(path)).threshold == 0.6
    logger.info("✓ Config defaults, env cap and save")


def main():
    """Run all core tests."""
    logger.info("Starting FairForge core tests...")

    tests = [
        ("Parse Valid Records", test_parse_records_valid_lines),
        ("Reject Invalid Records", test_parse_records_rejects_invalid_lines),
        ("Ignore Unknown Keys", test_parse_records_ignores_unknown_keys),
        ("Threshold Rule", test_group_cells_threshold_rule),
        ("Cell Hand Tally", test_group_cells_hand_tally),
        ("Per-race Cell Thresholds", test_group_cells_per_race_thresholds),
        ("Pairwise Gap", test_pairwise_gap),
        ("Threshold 0.5 Oracle", test_table_threshold_half_oracle),
        ("Best Threshold Oracle", test_table_best_threshold_oracle),
        ("Symmetric Cohort", test_identical_confusion_rates_give_zero),
        ("Single Approach", test_single_approach_equal_gaps),
        ("UR Equals AA", test_unit_accuracy_makes_ur_equal_aa),
        ("Degenerate Cohorts", test_degenerate_cohorts),
        ("AUC Examples", test_auc_examples),
        ("AUC Pairwise Oracle", test_auc_matches_pairwise_count),
        ("Report Breakdowns", test_evaluate_fills_breakdowns),
        ("Threshold Examples", test_optimal_threshold_examples),
        ("Threshold Brute Force", test_optimal_threshold_matches_exhaustive_search),
        ("Threshold Candidates", test_threshold_candidates_separate_adjacent_scores),
        ("Score Histogram", test_score_histogram),
        ("Constant Plan", test_constant_plan_matches_fixed_threshold),
        ("Plan vs Global", test_plan_beats_best_global_threshold),
        ("Markdown Shape", test_render_markdown_shape),
        ("Rankings and JSON", test_rankings_and_json_round_trip),
        ("Ranking Ties", test_rank_ties_and_singletons),
        ("Config", test_config_defaults_and_thread_cap),
    ]
    return run_suite("CORE", tests, logger)


if __name__ == "__main__":
    sys.exit(main())
