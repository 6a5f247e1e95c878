"""pllbench: zero-shot forced-choice evaluation of masked language models.

Scores candidate sentences with pseudo-log-likelihoods (PLL) and their
token-normalized variant (NormPLL) under any masked-LM backend, adjudicates
binary and 2-best forced-choice instances, and writes reproducible CSV
reports.
"""

from .scoring import (
    Decision,
    MaskedLogprobVector,
    ScoreMode,
    ScoreRecord,
    TokenizedSequence,
    decide_binary,
    decide_two_best,
    norm_pll,
    pll,
    score_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "MaskedLogprobVector",
    "ScoreMode",
    "ScoreRecord",
    "TokenizedSequence",
    "decide_binary",
    "decide_two_best",
    "norm_pll",
    "pll",
    "score_candidates",
    "__version__",
]
