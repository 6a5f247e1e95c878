"""Surface normalization: stripping "weird spaces" and related artifacts.

Benchmark files in the wild carry spaces before punctuation, runs of
whitespace, and glued-together words; all of these measurably move model
scores, so the transforms live here where they can be toggled per run.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

DEFAULT_PUNCT = frozenset(".,!?;:'”’)")


@dataclass(frozen=True)
class NormalizationPolicy:
    """Which cleanup passes run, and on which punctuation set."""

    remove_space_before_punct: bool = True
    punct_set: frozenset[str] = DEFAULT_PUNCT
    collapse_whitespace_runs: bool = False
    trim_ends: bool = False
    rejoin_contractions: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "punct_set", frozenset(self.punct_set))
        if self.remove_space_before_punct and not self.punct_set:
            raise ValueError("punct_set must be non-empty when remove_space_before_punct is set")


# The transform applied when a run asks for cleaned ("not kws") text.
NOT_KWS = NormalizationPolicy(remove_space_before_punct=True)
IDENTITY = NormalizationPolicy(remove_space_before_punct=False)


def normalize(text: str, policy: NormalizationPolicy = NOT_KWS) -> str:
    """Apply the policy's passes; total function, never inserts characters.

    Pass order is collapse, then space-before-punct removal, then trim, so
    the composite is idempotent (collapsing can surface a space before
    punctuation; removal then deletes it in the same call).
    """
    out = text
    if policy.collapse_whitespace_runs:
        out = re.sub(r"\s+", " ", out)
    if policy.remove_space_before_punct:
        punct = re.escape("".join(sorted(policy.punct_set)))
        out = re.sub(rf"[ \t]+(?=[{punct}])", "", out)
    if policy.rejoin_contractions:
        out = re.sub(r"(\w)' (\w)", r"\1'\2", out)
    if policy.trim_ends:
        out = out.strip()
    return out


@dataclass(frozen=True)
class Finding:
    """One suspicious site in a text."""

    kind: str
    position: int
    excerpt: str


_SPACE_BEFORE_PUNCT = re.compile(r"[ \t]+(?=[.,!?;:'”’)])")
_SENTENCE_START = re.compile(r"(?:^|[.!?]\s+)([a-z])")
_LONG_ALPHA_TOKEN = re.compile(r"[A-Za-z]{12,}")


def detect_weirdness(text: str) -> list[Finding]:
    """Lint a text for the artifact classes that are known to shift scores.

    Heuristic by design: flags space-before-punctuation sites, sentences
    opening in lowercase (a lowercased proper name, perhaps), and
    suspiciously long alphabetic tokens (two words glued together, perhaps).
    Long legitimate words do trigger the last check; findings are
    suspicions, not verdicts.
    """
    findings: list[Finding] = []
    for match in _SPACE_BEFORE_PUNCT.finditer(text):
        findings.append(
            Finding("space_before_punct", match.start(), _excerpt(text, match.start()))
        )
    for match in _SENTENCE_START.finditer(text):
        findings.append(
            Finding("sentence_initial_lowercase", match.start(1), _excerpt(text, match.start(1)))
        )
    for match in _LONG_ALPHA_TOKEN.finditer(text):
        findings.append(
            Finding("concatenation_suspect", match.start(), match.group(0))
        )
    findings.sort(key=lambda f: (f.position, f.kind))
    return findings


def _excerpt(text: str, position: int, radius: int = 15) -> str:
    return text[max(0, position - radius) : position + radius]
