"""Aggregation into evaluation reports, and their CSV / JSON artifacts.

The CSV holds one row per materialized candidate (skipped instances
included, with empty score fields, so length filtering stays auditable)
and round-trips exactly: re-reading a report CSV reproduces its counts and
accuracy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

from .datasets import DatasetTag, ForcedChoiceInstance
from .errors import EmptyInput, ModeMismatch, RejectedMixedModes
from .scoring import Decision, ScoreMode

CSV_HEADER = [
    "instance_id",
    "dataset",
    "candidate_index",
    "text",
    "token_count",
    "pll",
    "norm_pll",
    "chosen",
    "correct",
    "skipped",
    "wall_ms",
]


@dataclass(frozen=True)
class InstanceOutcome:
    """A scored instance: its decision, whether it was right, and its cost."""

    position: int
    instance: ForcedChoiceInstance
    decision: Decision
    correct: bool
    texts: tuple[str, ...]


@dataclass(frozen=True)
class SkippedInstance:
    """An instance excluded before scoring (some candidate over the token limit)."""

    position: int
    instance: ForcedChoiceInstance
    reason: str
    texts: tuple[str, ...] = ()
    token_counts: tuple[int, ...] = ()


@dataclass(frozen=True)
class CandidateRow:
    """One CSV row; None fields print as empty cells."""

    instance_id: str
    dataset: str
    candidate_index: int
    text: str
    token_count: int | None
    pll: float | None
    norm_pll: float | None
    chosen: bool | None
    correct: bool | None
    skipped: bool
    wall_ms: float | None


@dataclass
class EvaluationReport:
    """Aggregate counts and the per-candidate rows behind them."""

    dataset_tag: DatasetTag
    mode: ScoreMode
    n_total: int
    n_skipped: int
    n_correct: int
    accuracy: float
    two_best_accuracy: float | None
    wall_time_total: float
    per_instance: list[CandidateRow] = field(default_factory=list)


def aggregate(
    decisions: Sequence[InstanceOutcome],
    skips: Sequence[SkippedInstance] = (),
    *,
    dataset_tag: DatasetTag,
    mode: ScoreMode,
    wall_time_total: float | None = None,
) -> EvaluationReport:
    """Fold instance outcomes into a report; order-independent input.

    Skipped instances are excluded from both numerator and denominator.
    ``wall_time_total`` defaults to the per-candidate sum; when measured
    wall clock is supplied it is floored at that sum, since concurrent
    scoring can overlap candidate timings and the report promises the
    per-row total never exceeds the overall figure.
    """
    if not decisions:
        raise EmptyInput("no decisions to aggregate")
    two_best_flags = {outcome.decision.two_best_correct is not None for outcome in decisions}
    if len(two_best_flags) > 1:
        raise RejectedMixedModes("cannot mix binary and 2-best instances in one report")
    is_two_best = two_best_flags.pop()

    n_scored = len(decisions)
    n_skipped = len(skips)
    n_correct = sum(1 for outcome in decisions if outcome.correct)
    accuracy = n_correct / n_scored

    rows: list[CandidateRow] = []
    per_row_wall = 0.0
    ordered: list[InstanceOutcome | SkippedInstance] = sorted(
        [*decisions, *skips], key=lambda item: item.position
    )
    for item in ordered:
        inst = item.instance
        if isinstance(item, SkippedInstance):
            counts = item.token_counts or (None,) * len(inst.candidates)
            texts = item.texts or ("",) * len(inst.candidates)
            for index in range(len(inst.candidates)):
                rows.append(
                    CandidateRow(
                        instance_id=inst.id,
                        dataset=inst.dataset_tag.value,
                        candidate_index=index,
                        text=texts[index],
                        token_count=counts[index],
                        pll=None,
                        norm_pll=None,
                        chosen=None,
                        correct=None,
                        skipped=True,
                        wall_ms=None,
                    )
                )
            continue
        for record in item.decision.scores:
            per_row_wall += record.wall_time
            rows.append(
                CandidateRow(
                    instance_id=inst.id,
                    dataset=inst.dataset_tag.value,
                    candidate_index=record.candidate_index,
                    text=item.texts[record.candidate_index],
                    token_count=record.token_count,
                    pll=record.pll,
                    norm_pll=record.norm_pll,
                    chosen=(
                        record.candidate_index == item.decision.chosen_index
                        if item.decision.chosen_index is not None
                        else None
                    ),
                    correct=item.correct,
                    skipped=False,
                    wall_ms=record.wall_time * 1000.0,
                )
            )

    total = per_row_wall if wall_time_total is None else max(wall_time_total, per_row_wall)
    return EvaluationReport(
        dataset_tag=dataset_tag,
        mode=mode,
        n_total=n_scored + n_skipped,
        n_skipped=n_skipped,
        n_correct=n_correct,
        accuracy=accuracy,
        two_best_accuracy=accuracy if is_two_best else None,
        wall_time_total=total,
        per_instance=rows,
    )


@dataclass(frozen=True)
class DeltaReport:
    """Accuracy difference between two same-mode runs."""

    dataset_a: DatasetTag
    dataset_b: DatasetTag
    accuracy_a: float
    accuracy_b: float
    delta: float


def delta(report_a: EvaluationReport, report_b: EvaluationReport) -> DeltaReport:
    """Accuracy of A minus accuracy of B; modes must match."""
    if report_a.mode is not report_b.mode:
        raise ModeMismatch(f"cannot compare {report_a.mode.value} run against {report_b.mode.value}")
    return DeltaReport(
        dataset_a=report_a.dataset_tag,
        dataset_b=report_b.dataset_tag,
        accuracy_a=report_a.accuracy,
        accuracy_b=report_b.accuracy,
        delta=report_a.accuracy - report_b.accuracy,
    )


def format_percent(value: float, places: int = 2) -> str:
    """Half-up percentage formatting for printed accuracy figures."""
    quantum = Decimal(1).scaleb(-places)
    return str((Decimal(repr(value)) * 100).quantize(quantum, rounding=ROUND_HALF_UP))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(report: EvaluationReport, path: str | Path, *, include_timing: bool = True) -> None:
    """Write the per-candidate rows as UTF-8 RFC-4180-quoted CSV.

    Floats carry 6 decimal places. ``include_timing=False`` blanks the
    wall-time column so two identical runs produce byte-identical files.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in report.per_instance:
            writer.writerow(
                [
                    row.instance_id,
                    row.dataset,
                    row.candidate_index,
                    row.text,
                    _cell(row.token_count),
                    _cell(row.pll),
                    _cell(row.norm_pll),
                    _cell(row.chosen),
                    _cell(row.correct),
                    _cell(row.skipped),
                    _cell(row.wall_ms) if include_timing else "",
                ]
            )


def write_summary_json(report: EvaluationReport, path: str | Path) -> None:
    """Write the one-object JSON sidecar next to the CSV."""
    payload = {
        "dataset": report.dataset_tag.value,
        "mode": report.mode.value,
        "accuracy": report.accuracy,
        "two_best_accuracy": report.two_best_accuracy,
        "n_total": report.n_total,
        "n_skipped": report.n_skipped,
        "wall_time_s": report.wall_time_total,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class CsvSummary:
    """Counts reconstructed from a report CSV."""

    n_total: int
    n_skipped: int
    n_correct: int
    accuracy: float


def read_csv_summary(path: str | Path) -> CsvSummary:
    """Recompute the aggregate counts from a written CSV (round-trip check)."""
    seen: dict[str, tuple[bool, bool | None]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            skipped = row["skipped"] == "true"
            correct = None if row["correct"] == "" else row["correct"] == "true"
            seen[row["instance_id"]] = (skipped, correct)
    n_total = len(seen)
    n_skipped = sum(1 for skipped, _ in seen.values() if skipped)
    n_correct = sum(1 for skipped, correct in seen.values() if not skipped and correct)
    scored = n_total - n_skipped
    return CsvSummary(
        n_total=n_total,
        n_skipped=n_skipped,
        n_correct=n_correct,
        accuracy=n_correct / scored if scored else 0.0,
    )
