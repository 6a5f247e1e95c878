"""Evaluation driver: ordering, atomic skips, and skip monotonicity."""

from __future__ import annotations

import pytest

from pllbench.backends import unigram_backend
from pllbench.datasets import DatasetTag, ForcedChoiceInstance
from pllbench.report import aggregate
from pllbench.runner import evaluate_instances
from pllbench.scoring import ScoreMode


def _instance(index: int, filler: int) -> ForcedChoiceInstance:
    padding = " ".join(["pad"] * filler)
    return ForcedChoiceInstance(
        f"inst-{index:02d}",
        f"{padding} start <mask> end".strip(),
        ("one", "two two"),
        (True, False),
        DatasetTag.WINOGRADVERSARIAL,
    )


@pytest.fixture
def backend():
    return unigram_backend(
        {"pad": 5, "start": 3, "end": 3, "one": 2, "two": 1}, max_tokens=64
    )


def test_outcomes_keep_instance_order(backend):
    instances = [_instance(i, filler=i % 3) for i in range(10)]
    outcomes, skips, elapsed = evaluate_instances(instances, backend, parallelism=4)
    assert not skips
    assert [o.position for o in outcomes] == list(range(10))
    assert elapsed >= 0.0


def test_over_length_instances_skip_atomically(backend):
    instances = [_instance(0, filler=0), _instance(1, filler=30)]
    outcomes, skips, _ = evaluate_instances(instances, backend, max_tokens=10)
    assert [o.instance.id for o in outcomes] == ["inst-00"]
    assert [s.instance.id for s in skips] == ["inst-01"]
    assert skips[0].token_counts and max(skips[0].token_counts) > 10


def test_skipping_is_monotone_in_token_limit(backend):
    instances = [_instance(i, filler=i) for i in range(12)]

    def skipped_ids(limit: int) -> set[str]:
        _, skips, _ = evaluate_instances(instances, backend, max_tokens=limit)
        return {s.instance.id for s in skips}

    previous: set[str] | None = None
    for limit in (4, 6, 8, 10, 12, 64):
        current = skipped_ids(limit)
        if previous is not None:
            assert current <= previous  # raising the limit never skips more
        previous = current


def test_parallel_and_serial_runs_agree(backend):
    instances = [_instance(i, filler=i % 4) for i in range(16)]
    serial, _, _ = evaluate_instances(instances, backend, parallelism=1)
    parallel, _, _ = evaluate_instances(instances, backend, parallelism=8)
    assert [o.decision.chosen_index for o in serial] == [
        o.decision.chosen_index for o in parallel
    ]
    assert [r.pll for o in serial for r in o.decision.scores] == [
        r.pll for o in parallel for r in o.decision.scores
    ]


def test_runner_feeds_aggregate(backend):
    instances = [_instance(i, filler=0) for i in range(4)]
    outcomes, skips, elapsed = evaluate_instances(instances, backend)
    report = aggregate(
        outcomes,
        skips,
        dataset_tag=DatasetTag.WINOGRADVERSARIAL,
        mode=ScoreMode.PLL,
        wall_time_total=elapsed,
    )
    assert report.n_total == 4
    assert len(report.per_instance) == 8
