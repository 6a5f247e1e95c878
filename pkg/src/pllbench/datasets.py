"""Dataset ingestion: four source formats funneled into one instance shape.

Every dataset ends up as :class:`ForcedChoiceInstance` -- a template with a
single mask placeholder, an ordered candidate list, and correctness flags
-- so the scoring and reporting layers never see format differences.
Candidate substitution (with capitalization repair) happens here too, as
does the diff tool for comparing independently-prepared copies of the same
dataset.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import (
    BadAnswerIndex,
    IndexOutOfRange,
    MalformedLine,
    MalformedRow,
    MissingField,
    MissingPlaceholder,
    SchemaError,
    WrongCandidateCount,
)
from .textnorm import NormalizationPolicy, normalize

MASK = "<mask>"


class DatasetTag(str, Enum):
    WINOGRADVERSARIAL = "winogradversarial"
    WINOGRAD = "winograd"
    WINOGRANDE = "winogrande"
    TIMEDIAL = "timedial"


_BINARY_TAGS = {DatasetTag.WINOGRADVERSARIAL, DatasetTag.WINOGRAD, DatasetTag.WINOGRANDE}


@dataclass(frozen=True)
class ForcedChoiceInstance:
    """One evaluation item: a template with one mask slot plus its candidates.

    ``pair_id`` links switch-word twins (two templates differing in a single
    word whose gold label does not flip); ``switch_word`` holds that
    ``(w, w_prime)`` pair.
    """

    id: str
    template: str
    candidates: tuple[str, ...]
    correct_flags: tuple[bool, ...]
    dataset_tag: DatasetTag
    pair_id: str | None = None
    switch_word: tuple[str, str] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "correct_flags", tuple(bool(f) for f in self.correct_flags))
        if self.template.count(MASK) != 1:
            raise MalformedRow(
                f"instance {self.id}: template must contain exactly one {MASK}, "
                f"found {self.template.count(MASK)}"
            )
        if len(self.candidates) < 2:
            raise WrongCandidateCount(f"instance {self.id}: needs >= 2 candidates")
        if len(self.correct_flags) != len(self.candidates):
            raise WrongCandidateCount(f"instance {self.id}: flag/candidate count mismatch")
        n_correct = sum(self.correct_flags)
        if self.dataset_tag in _BINARY_TAGS and (len(self.candidates) != 2 or n_correct != 1):
            raise WrongCandidateCount(
                f"instance {self.id}: binary datasets need 2 candidates with exactly 1 correct"
            )
        if self.dataset_tag is DatasetTag.TIMEDIAL and (
            len(self.candidates) != 4 or n_correct != 2
        ):
            raise WrongCandidateCount(
                f"instance {self.id}: TimeDial instances need 4 candidates with exactly 2 correct"
            )
        if n_correct < 1:
            raise WrongCandidateCount(f"instance {self.id}: needs >= 1 correct flag")

    @property
    def is_two_best(self) -> bool:
        return sum(self.correct_flags) >= 2


@dataclass(frozen=True)
class MaterializedCandidate:
    """A template with one candidate substituted in, ready to score."""

    instance_id: str
    candidate_index: int
    full_text: str


def fixture_path() -> Path:
    """Filesystem path of the bundled 20-sentence adversarial-pair fixture."""
    return Path(resources.files("pllbench").joinpath("data/winogradversarial.jsonl"))  # type: ignore[arg-type]


# --- JSON-lines parsers -----------------------------------------------------

def _iter_lines(source: str | Iterable[str]) -> Iterator[tuple[int, str]]:
    lines = source.splitlines() if isinstance(source, str) else source
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped:
            yield number, stripped


def _answer_to_flags(answer: object, n: int, line_number: int) -> tuple[bool, ...]:
    if not isinstance(answer, str) or answer not in {str(i) for i in range(1, n + 1)}:
        raise BadAnswerIndex(f"line {line_number}: answer must be one of 1..{n}, got {answer!r}")
    chosen = int(answer) - 1
    return tuple(i == chosen for i in range(n))


def _template_word_diff(a: str, b: str) -> tuple[str, str] | None:
    """The single differing whitespace-delimited word, or None if not exactly one."""
    words_a, words_b = a.split(), b.split()
    if len(words_a) != len(words_b):
        return None
    diffs = [(x, y) for x, y in zip(words_a, words_b) if x != y]
    if len(diffs) != 1:
        return None
    w, w_prime = diffs[0]
    return w.strip(".,!?;:"), w_prime.strip(".,!?;:")


def parse_winogradversarial(source: str | Iterable[str]) -> list[ForcedChoiceInstance]:
    """Parse switch-word-pair JSON lines: sentence / option1 / option2 / answer.

    Consecutive lines whose templates differ in exactly one word (with
    matching candidates and labels) are linked as a pair and the switch
    word extracted.
    """
    instances: list[ForcedChoiceInstance] = []
    for number, line in _iter_lines(source):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(number, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise MalformedLine(number, "expected a JSON object")
        missing = [k for k in ("sentence", "option1", "option2", "answer") if k not in record]
        if missing:
            raise MalformedLine(number, f"missing fields {missing}")
        sentence = record["sentence"]
        if not isinstance(sentence, str) or sentence.count(MASK) != 1:
            raise MalformedLine(number, f"sentence must contain exactly one {MASK}")
        instances.append(
            ForcedChoiceInstance(
                id=f"winogradversarial-{number:04d}",
                template=sentence,
                candidates=(str(record["option1"]), str(record["option2"])),
                correct_flags=_answer_to_flags(record["answer"], 2, number),
                dataset_tag=DatasetTag.WINOGRADVERSARIAL,
            )
        )
    return _link_pairs(instances)


def _link_pairs(instances: list[ForcedChoiceInstance]) -> list[ForcedChoiceInstance]:
    linked: list[ForcedChoiceInstance] = []
    index = 0
    pair_number = 0
    while index < len(instances):
        first = instances[index]
        second = instances[index + 1] if index + 1 < len(instances) else None
        switch = None
        if (
            second is not None
            and first.candidates == second.candidates
            and first.correct_flags == second.correct_flags
        ):
            switch = _template_word_diff(first.template, second.template)
        if switch is not None:
            pair_number += 1
            pair_id = f"pair-{pair_number:04d}"
            for inst in (first, second):
                linked.append(
                    ForcedChoiceInstance(
                        id=inst.id,
                        template=inst.template,
                        candidates=inst.candidates,
                        correct_flags=inst.correct_flags,
                        dataset_tag=inst.dataset_tag,
                        pair_id=pair_id,
                        switch_word=switch,
                    )
                )
            index += 2
        else:
            linked.append(first)
            index += 1
    return linked


def parse_winogrande(source: str | Iterable[str]) -> list[ForcedChoiceInstance]:
    """Parse underscore-placeholder JSON lines: sentence / option1 / option2 / answer."""
    instances: list[ForcedChoiceInstance] = []
    for number, line in _iter_lines(source):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(number, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise MalformedLine(number, "expected a JSON object")
        missing = [k for k in ("sentence", "option1", "option2", "answer") if k not in record]
        if missing:
            raise MalformedLine(number, f"missing fields {missing}")
        sentence = str(record["sentence"])
        underscores = sentence.count("_")
        if underscores == 0:
            raise MissingPlaceholder(f"line {number}: sentence has no underscore placeholder")
        if underscores > 1:
            raise MalformedLine(number, f"sentence has {underscores} underscore placeholders")
        instances.append(
            ForcedChoiceInstance(
                id=f"winogrande-{number:05d}",
                template=sentence.replace("_", MASK),
                candidates=(str(record["option1"]), str(record["option2"])),
                correct_flags=_answer_to_flags(record["answer"], 2, number),
                dataset_tag=DatasetTag.WINOGRANDE,
            )
        )
    return instances


# --- Winograd XML ------------------------------------------------------------

_WS_RUN = re.compile(r"\s+")


def _clean_segment(text: str | None) -> str:
    return _WS_RUN.sub(" ", (text or "").strip())


def parse_winograd_xml(document: str) -> list[ForcedChoiceInstance]:
    """Parse the public pronoun-resolution XML collection.

    Text segments arrive with stray leading/trailing whitespace and inner
    newlines; both are cleaned here. Answer strings are only trimmed --
    their initial capitalization is repaired at substitution time, when we
    know where in the sentence they land.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise SchemaError(f"not well-formed XML: {exc}") from exc
    schemas = root.findall(".//schema")
    if not schemas:
        raise SchemaError("document contains no <schema> elements")

    instances: list[ForcedChoiceInstance] = []
    for number, schema in enumerate(schemas, start=1):
        text = schema.find("text")
        if text is None:
            raise MissingField(f"schema {number}: missing <text>")
        txt1 = text.find("txt1")
        pron = text.find("pron")
        txt2 = text.find("txt2")
        if txt1 is None or pron is None or txt2 is None:
            raise MissingField(f"schema {number}: <text> needs <txt1>, <pron>, <txt2>")
        answers = schema.findall("answers/answer")
        if len(answers) != 2:
            raise MissingField(f"schema {number}: expected 2 <answer> elements, got {len(answers)}")
        correct = schema.find("correctAnswer")
        if correct is None or not (correct.text or "").strip():
            raise MissingField(f"schema {number}: missing <correctAnswer>")

        before = _clean_segment(txt1.text)
        after = _clean_segment(txt2.text)
        template = " ".join(part for part in (before, MASK, after) if part)
        letter = (correct.text or "").strip().rstrip(".").upper()
        if letter not in ("A", "B"):
            raise SchemaError(f"schema {number}: correctAnswer must be A or B, got {letter!r}")
        chosen = 0 if letter == "A" else 1
        instances.append(
            ForcedChoiceInstance(
                id=f"winograd-{number:03d}",
                template=template,
                candidates=tuple(_clean_segment(a.text) for a in answers),
                correct_flags=(chosen == 0, chosen == 1),
                dataset_tag=DatasetTag.WINOGRAD,
            )
        )
    return instances


# --- TimeDial ----------------------------------------------------------------

def parse_timedial(document: str, *, turn_separator: str = " ") -> list[ForcedChoiceInstance]:
    """Parse the temporal-dialogue JSON: 4 span candidates, 2 of them right.

    Dialogue turns are joined into one template string with
    ``turn_separator``; exactly one turn must carry the mask span.
    """
    try:
        rows = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedRow(f"invalid JSON document: {exc.msg}") from exc
    if isinstance(rows, dict) and "data" in rows:
        rows = rows["data"]
    if not isinstance(rows, list):
        raise MalformedRow("expected a JSON array of rows")

    instances: list[ForcedChoiceInstance] = []
    for number, row in enumerate(rows, start=1):
        if not isinstance(row, dict):
            raise MalformedRow(f"row {number}: expected a JSON object")
        conversation = row.get("conversation")
        if not isinstance(conversation, list) or not conversation:
            raise MalformedRow(f"row {number}: missing conversation turns")
        candidates = []
        flags = []
        for key, flag in (
            ("correct1", True),
            ("correct2", True),
            ("incorrect1", False),
            ("incorrect2", False),
        ):
            value = row.get(key)
            if not isinstance(value, str) or not value.strip():
                raise WrongCandidateCount(f"row {number}: missing or empty {key!r}")
            candidates.append(value)
            flags.append(flag)
        template = turn_separator.join(str(turn) for turn in conversation)
        if template.count(MASK) != 1:
            raise MalformedRow(
                f"row {number}: conversation must contain exactly one {MASK} span"
            )
        instances.append(
            ForcedChoiceInstance(
                id=f"timedial-{row.get('id', number)}",
                template=template,
                candidates=tuple(candidates),
                correct_flags=tuple(flags),
                dataset_tag=DatasetTag.TIMEDIAL,
            )
        )
    return instances


# --- substitution ------------------------------------------------------------

def _at_sentence_start(text: str, index: int) -> bool:
    cursor = index - 1
    while cursor >= 0 and text[cursor].isspace():
        cursor -= 1
    return cursor < 0 or text[cursor] in ".!?"


def _word_pattern(word: str) -> re.Pattern[str]:
    return re.compile(rf"(?<![A-Za-z]){re.escape(word)}(?![A-Za-z])")


def _repair_capitalization(template: str, candidate: str, mask_start: int) -> str:
    """Repair the candidate's leading capital for its landing spot.

    Sentence-initial slot: uppercase the first letter. Mid-sentence slot
    with a capitalized candidate: keep the capital when the same word shows
    up capitalized mid-sentence elsewhere in the template (a proper noun),
    lowercase it when the template uses the word in lowercase (a carried-
    over sentence capital like "The"), and otherwise leave it alone.
    Template-only evidence keeps this deterministic with no word lists.
    """
    if not candidate:
        return candidate
    if _at_sentence_start(template, mask_start):
        return candidate[0].upper() + candidate[1:]
    if not candidate[0].isupper():
        return candidate
    match = re.match(r"[A-Za-z]+", candidate)
    if match is None:
        return candidate
    word = match.group(0)
    context = template.replace(MASK, "\x00")
    for occurrence in _word_pattern(word).finditer(context):
        if not _at_sentence_start(context, occurrence.start()):
            return candidate
    if _word_pattern(word[0].lower() + word[1:]).search(context):
        return candidate[0].lower() + candidate[1:]
    return candidate


def substitute(inst: ForcedChoiceInstance, candidate_index: int) -> MaterializedCandidate:
    """Replace the mask slot with one candidate, repairing its capitalization.

    Every character of the template outside the mask span is preserved
    verbatim.
    """
    if not 0 <= candidate_index < len(inst.candidates):
        raise IndexOutOfRange(
            f"candidate index {candidate_index} outside 0..{len(inst.candidates) - 1}"
        )
    mask_start = inst.template.find(MASK)
    candidate = _repair_capitalization(inst.template, inst.candidates[candidate_index], mask_start)
    return MaterializedCandidate(
        instance_id=inst.id,
        candidate_index=candidate_index,
        full_text=inst.template[:mask_start] + candidate + inst.template[mask_start + len(MASK):],
    )


def materialize_all(instances: Sequence[ForcedChoiceInstance]) -> list[MaterializedCandidate]:
    return [
        substitute(inst, index)
        for inst in instances
        for index in range(len(inst.candidates))
    ]


# --- canonical serialization --------------------------------------------------

def serialize_instances(instances: Sequence[ForcedChoiceInstance]) -> str:
    """Write instances in the canonical JSON-lines shape.

    Binary instances use the sentence/option1/option2/answer shape; wider
    instances extend it with explicit candidate and flag arrays.
    """
    lines = []
    for inst in instances:
        if len(inst.candidates) == 2 and sum(inst.correct_flags) == 1:
            record = {
                "sentence": inst.template,
                "option1": inst.candidates[0],
                "option2": inst.candidates[1],
                "answer": "1" if inst.correct_flags[0] else "2",
            }
        else:
            record = {
                "sentence": inst.template,
                "options": list(inst.candidates),
                "correct_flags": list(inst.correct_flags),
            }
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def normalize_instances(
    instances: Sequence[ForcedChoiceInstance], policy: NormalizationPolicy
) -> list[ForcedChoiceInstance]:
    """Apply a surface normalization to every template and candidate."""
    return [
        ForcedChoiceInstance(
            id=inst.id,
            template=normalize(inst.template, policy),
            candidates=tuple(normalize(c, policy) for c in inst.candidates),
            correct_flags=inst.correct_flags,
            dataset_tag=inst.dataset_tag,
            pair_id=inst.pair_id,
            switch_word=inst.switch_word,
        )
        for inst in instances
    ]


# --- preparation diffing -------------------------------------------------------

_STRIP_PUNCT_SPACE = NormalizationPolicy(remove_space_before_punct=True)
_COLLAPSE = NormalizationPolicy(
    remove_space_before_punct=False, collapse_whitespace_runs=True, trim_ends=True
)


@dataclass(frozen=True)
class DiffFinding:
    key: tuple[str, int]
    kind: str
    text_a: str
    text_b: str


@dataclass
class DiffReport:
    """Differences between two preparations of the same dataset, by defect class."""

    findings: list[DiffFinding] = field(default_factory=list)
    missing_in_a: list[tuple[str, int]] = field(default_factory=list)
    missing_in_b: list[tuple[str, int]] = field(default_factory=list)

    @property
    def counts(self) -> Counter[str]:
        return Counter(finding.kind for finding in self.findings)

    @property
    def total(self) -> int:
        return len(self.findings)

    @property
    def empty(self) -> bool:
        return not (self.findings or self.missing_in_a or self.missing_in_b)


def classify_difference(text_a: str, text_b: str) -> str | None:
    """Name the single transform separating two variants, if one exists."""
    if text_a == text_b:
        return None
    if text_a.lower() == text_b.lower():
        return "casing_only"
    if normalize(text_a, _STRIP_PUNCT_SPACE) == normalize(text_b, _STRIP_PUNCT_SPACE):
        return "space_before_punct"
    if normalize(text_a, _COLLAPSE) == normalize(text_b, _COLLAPSE):
        return "whitespace_runs"
    if re.sub(r"\s+", "", text_a) == re.sub(r"\s+", "", text_b):
        return "concatenation"
    return "other"


def diff_preparations(
    a: Sequence[MaterializedCandidate], b: Sequence[MaterializedCandidate]
) -> DiffReport:
    """Compare two materialized preparations keyed by (instance id, candidate index)."""
    by_key_a = {(m.instance_id, m.candidate_index): m.full_text for m in a}
    by_key_b = {(m.instance_id, m.candidate_index): m.full_text for m in b}
    report = DiffReport(
        missing_in_a=sorted(set(by_key_b) - set(by_key_a)),
        missing_in_b=sorted(set(by_key_a) - set(by_key_b)),
    )
    for key in sorted(set(by_key_a) & set(by_key_b)):
        kind = classify_difference(by_key_a[key], by_key_b[key])
        if kind is not None:
            report.findings.append(DiffFinding(key, kind, by_key_a[key], by_key_b[key]))
    return report
