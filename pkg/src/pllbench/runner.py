"""Evaluation driver: fan instances out to workers, fold results back in order.

Instances are independent work units. Results are keyed by instance
position, never by completion order, so the parallelism level can change
timing but not a single score or decision.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .backends.base import MaskedLmBackend
from .datasets import ForcedChoiceInstance, substitute
from .errors import SequenceTooLong
from .report import InstanceOutcome, SkippedInstance
from .scoring import ScoreMode, decide_binary, decide_two_best, score_candidates


def _run_one(
    position: int,
    inst: ForcedChoiceInstance,
    backend: MaskedLmBackend,
    mode: ScoreMode,
    max_tokens: int | None,
) -> InstanceOutcome | SkippedInstance:
    try:
        records = score_candidates(inst, backend, mode, max_tokens=max_tokens)
    except SequenceTooLong as exc:
        return SkippedInstance(
            position=position,
            instance=inst,
            reason=str(exc),
            texts=tuple(exc.texts or ()),
            token_counts=tuple(exc.token_counts or ()),
        )
    if inst.is_two_best:
        decision = decide_two_best(records, inst.correct_flags, mode)
        correct = bool(decision.two_best_correct)
    else:
        decision = decide_binary(records, mode)
        correct = inst.correct_flags[decision.chosen_index]  # type: ignore[index]
    return InstanceOutcome(
        position=position,
        instance=inst,
        decision=decision,
        correct=correct,
        texts=tuple(substitute(inst, i).full_text for i in range(len(inst.candidates))),
    )


def evaluate_instances(
    instances: Sequence[ForcedChoiceInstance],
    backend: MaskedLmBackend,
    *,
    mode: ScoreMode = ScoreMode.PLL,
    max_tokens: int | None = None,
    parallelism: int = 1,
) -> tuple[list[InstanceOutcome], list[SkippedInstance], float]:
    """Score every instance; returns (outcomes, skips, elapsed seconds).

    Over-length instances are skipped atomically, never partially scored.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    started = time.perf_counter()
    results: list[InstanceOutcome | SkippedInstance]
    if parallelism == 1:
        results = [
            _run_one(position, inst, backend, mode, max_tokens)
            for position, inst in enumerate(instances)
        ]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(
                pool.map(
                    lambda args: _run_one(args[0], args[1], backend, mode, max_tokens),
                    enumerate(instances),
                )
            )
    elapsed = time.perf_counter() - started
    outcomes = [r for r in results if isinstance(r, InstanceOutcome)]
    skips = [r for r in results if isinstance(r, SkippedInstance)]
    return outcomes, skips, elapsed
