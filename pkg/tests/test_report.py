"""Aggregation, deltas, and the CSV / JSON artifacts."""

from __future__ import annotations

import json
import random

import pytest

from pllbench.datasets import DatasetTag, ForcedChoiceInstance
from pllbench.errors import EmptyInput, ModeMismatch, RejectedMixedModes
from pllbench.report import (
    EvaluationReport,
    InstanceOutcome,
    SkippedInstance,
    aggregate,
    delta,
    format_percent,
    read_csv_summary,
    write_csv,
    write_summary_json,
)
from pllbench.scoring import Decision, ScoreMode, ScoreRecord


def _record(index: int, value: float) -> ScoreRecord:
    return ScoreRecord(index, value, value / 3, 3, wall_time=0.001)


def _binary_outcome(position: int, correct: bool) -> InstanceOutcome:
    inst = ForcedChoiceInstance(
        f"inst-{position:03d}",
        "a <mask> b",
        ("x", "y"),
        (True, False),
        DatasetTag.WINOGRADVERSARIAL,
    )
    decision = Decision(
        mode=ScoreMode.PLL,
        scores=(_record(0, -1.0 if correct else -2.0), _record(1, -2.0 if correct else -1.0)),
        chosen_index=0 if correct else 1,
    )
    return InstanceOutcome(position, inst, decision, correct, ("a x b", "a y b"))


def _two_best_outcome(position: int, correct: bool) -> InstanceOutcome:
    inst = ForcedChoiceInstance(
        f"td-{position:03d}",
        "wait <mask> minutes",
        ("a", "b", "c", "d"),
        (True, True, False, False),
        DatasetTag.TIMEDIAL,
    )
    decision = Decision(
        mode=ScoreMode.NORM_PLL,
        scores=tuple(_record(i, -float(i + 1)) for i in range(4)),
        two_best_correct=correct,
    )
    return InstanceOutcome(
        position, inst, decision, correct, tuple(f"wait {c} minutes" for c in inst.candidates)
    )


def _skip(position: int) -> SkippedInstance:
    inst = ForcedChoiceInstance(
        f"skip-{position:03d}",
        "long <mask> text",
        ("p", "q"),
        (True, False),
        DatasetTag.WINOGRADVERSARIAL,
    )
    return SkippedInstance(
        position, inst, "over limit", ("long p text", "long q text"), (700, 710)
    )


# --- aggregate ------------------------------------------------------------------

def test_aggregate_twenty_decisions_sixteen_correct():
    outcomes = [_binary_outcome(i, i < 16) for i in range(20)]
    report = aggregate(outcomes, dataset_tag=DatasetTag.WINOGRADVERSARIAL, mode=ScoreMode.PLL)
    assert report.accuracy == 0.80
    assert report.n_total == 20 and report.n_correct == 16 and report.n_skipped == 0
    assert format_percent(report.accuracy) == "80.00"


def test_aggregate_zero_correct():
    outcomes = [_binary_outcome(i, False) for i in range(5)]
    report = aggregate(outcomes, dataset_tag=DatasetTag.WINOGRADVERSARIAL, mode=ScoreMode.PLL)
    assert report.accuracy == 0.0


def test_aggregate_rejects_mixed_modes():
    with pytest.raises(RejectedMixedModes):
        aggregate(
            [_binary_outcome(0, True), _two_best_outcome(1, True)],
            dataset_tag=DatasetTag.TIMEDIAL,
            mode=ScoreMode.PLL,
        )


def test_aggregate_requires_decisions():
    with pytest.raises(EmptyInput):
        aggregate([], dataset_tag=DatasetTag.WINOGRAD, mode=ScoreMode.PLL)


def test_aggregate_skips_excluded_from_accuracy():
    outcomes = [_binary_outcome(0, True), _binary_outcome(1, False)]
    report = aggregate(
        outcomes, [_skip(2)], dataset_tag=DatasetTag.WINOGRADVERSARIAL, mode=ScoreMode.PLL
    )
    assert report.n_total == 3 and report.n_skipped == 1
    assert report.accuracy == 0.5


def test_aggregate_two_best_accuracy_populated_only_for_two_best():
    binary = aggregate(
        [_binary_outcome(0, True)], dataset_tag=DatasetTag.WINOGRAD, mode=ScoreMode.PLL
    )
    assert binary.two_best_accuracy is None
    two_best = aggregate(
        [_two_best_outcome(0, True), _two_best_outcome(1, False)],
        dataset_tag=DatasetTag.TIMEDIAL,
        mode=ScoreMode.NORM_PLL,
    )
    assert two_best.two_best_accuracy == 0.5


def test_aggregate_accuracy_invariant_under_reordering():
    outcomes = [_binary_outcome(i, i % 3 == 0) for i in range(9)]
    shuffled = outcomes[:]
    random.Random(4).shuffle(shuffled)
    direct = aggregate(outcomes, dataset_tag=DatasetTag.WINOGRADVERSARIAL, mode=ScoreMode.PLL)
    permuted = aggregate(shuffled, dataset_tag=DatasetTag.WINOGRADVERSARIAL, mode=ScoreMode.PLL)
    assert direct.accuracy == permuted.accuracy
    assert [r.instance_id for r in direct.per_instance] == [
        r.instance_id for r in permuted.per_instance
    ]


def test_wall_time_total_floors_at_row_sum():
    outcomes = [_binary_outcome(i, True) for i in range(4)]
    report = aggregate(
        outcomes,
        dataset_tag=DatasetTag.WINOGRADVERSARIAL,
        mode=ScoreMode.PLL,
        wall_time_total=1e-9,
    )
    row_sum_ms = sum(r.wall_ms for r in report.per_instance if r.wall_ms is not None)
    assert row_sum_ms <= report.wall_time_total * 1000.0


# --- delta ---------------------------------------------------------------------------

def _report_with_accuracy(accuracy: float, mode=ScoreMode.PLL, tag=DatasetTag.WINOGRAD):
    n_correct = round(accuracy * 10000)
    return EvaluationReport(
        dataset_tag=tag,
        mode=mode,
        n_total=10000,
        n_skipped=0,
        n_correct=n_correct,
        accuracy=n_correct / 10000,
        two_best_accuracy=None,
        wall_time_total=0.0,
    )


def test_delta_published_albert_row():
    grad = _report_with_accuracy(0.8105)
    grande = _report_with_accuracy(0.7671, tag=DatasetTag.WINOGRANDE)
    result = delta(grad, grande)
    assert round(result.delta * 100, 2) == 4.34


def test_delta_published_bert_row():
    grad = _report_with_accuracy(0.6597)
    grande = _report_with_accuracy(0.5732, tag=DatasetTag.WINOGRANDE)
    assert round(delta(grad, grande).delta * 100, 2) == 8.65


def test_delta_of_identical_reports_is_zero():
    report = _report_with_accuracy(0.7)
    assert delta(report, report).delta == 0.0


def test_delta_mode_mismatch():
    with pytest.raises(ModeMismatch):
        delta(_report_with_accuracy(0.7), _report_with_accuracy(0.7, mode=ScoreMode.NORM_PLL))


def test_format_percent_rounds_half_up():
    assert format_percent(0.81045) == "81.05"
    assert format_percent(0.5) == "50.00"


# --- CSV ------------------------------------------------------------------------------

def test_csv_binary_run_has_two_rows_per_instance(tmp_path):
    outcomes = [_binary_outcome(i, True) for i in range(20)]
    report = aggregate(outcomes, dataset_tag=DatasetTag.WINOGRADVERSARIAL, mode=ScoreMode.PLL)
    path = tmp_path / "out.csv"
    write_csv(report, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 40


def test_csv_timedial_run_has_four_rows_per_kept_instance(tmp_path):
    outcomes = [_two_best_outcome(i, True) for i in range(3)]
    report = aggregate(
        outcomes, [_skip(3)], dataset_tag=DatasetTag.TIMEDIAL, mode=ScoreMode.NORM_PLL
    )
    path = tmp_path / "td.csv"
    write_csv(report, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 3 * 4 + 2


def test_csv_skipped_rows_flagged_with_empty_scores(tmp_path):
    report = aggregate(
        [_binary_outcome(0, True)],
        [_skip(1)],
        dataset_tag=DatasetTag.WINOGRADVERSARIAL,
        mode=ScoreMode.PLL,
    )
    path = tmp_path / "skips.csv"
    write_csv(report, path)
    rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
    skipped_rows = [row for row in rows if row[0].startswith("skip-")]
    assert len(skipped_rows) == 2
    for row in skipped_rows:
        assert row[9] == "true"  # skipped
        assert row[5] == row[6] == row[7] == row[8] == ""  # scores and decision empty
        assert row[4] != ""  # token_count kept for auditing the filter


def test_csv_round_trip_reproduces_counts(tmp_path):
    outcomes = [_binary_outcome(i, i % 4 != 0) for i in range(12)]
    report = aggregate(
        outcomes, [_skip(12), _skip(13)],
        dataset_tag=DatasetTag.WINOGRADVERSARIAL,
        mode=ScoreMode.PLL,
    )
    path = tmp_path / "rt.csv"
    write_csv(report, path)
    summary = read_csv_summary(path)
    assert summary.n_total == report.n_total
    assert summary.n_skipped == report.n_skipped
    assert summary.n_correct == report.n_correct
    assert summary.accuracy == report.accuracy


def test_summary_sidecar_shape(tmp_path):
    report = aggregate(
        [_binary_outcome(0, True)], dataset_tag=DatasetTag.WINOGRAD, mode=ScoreMode.PLL
    )
    path = tmp_path / "run.summary.json"
    write_summary_json(report, path)
    payload = json.loads(path.read_text())
    assert set(payload) == {
        "dataset", "mode", "accuracy", "two_best_accuracy", "n_total", "n_skipped", "wall_time_s",
    }
    assert payload["dataset"] == "winograd" and payload["accuracy"] == 1.0
