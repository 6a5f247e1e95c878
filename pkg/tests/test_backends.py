"""Table, unigram, and windowed backends."""

from __future__ import annotations

import itertools
import json
import math

import pytest

from pllbench.backends import (
    HOLE,
    TableBackend,
    WindowedBackend,
    load_counts,
    unigram_backend,
    window_starts,
    windowed_masked_logprobs,
)
from pllbench.errors import (
    BackendFailure,
    EmptyText,
    NonFiniteScore,
    SequenceTooLong,
    UnencodableText,
    UnknownToken,
)
from pllbench.scoring import MaskedLogprobVector, TokenizedSequence, pll

from conftest import AB_TABLE, ProceduralTable, StubBackend, oracle_pll


# --- table -------------------------------------------------------------------

def test_table_tokenize_whitespace(ab_backend):
    seq = ab_backend.tokenize("a b")
    assert seq.tokens == ("a", "b")
    assert seq.scoreable_count == 2
    assert seq.offsets == ((0, 1), (2, 3))
    assert seq.surface == "a b"


def test_table_tokenize_errors(ab_backend):
    with pytest.raises(EmptyText):
        ab_backend.tokenize("")
    with pytest.raises(EmptyText):
        ab_backend.tokenize("   ")
    with pytest.raises(UnencodableText):
        ab_backend.tokenize("a z")


def test_table_masked_logprobs_lookup(ab_backend):
    vector = ab_backend.masked_logprobs(ab_backend.tokenize("a b"), [0, 1])
    assert vector.logprobs == (math.log(0.8), math.log(0.7))
    assert round(vector.logprobs[0], 4) == -0.2231
    assert round(vector.logprobs[1], 4) == -0.3567


def test_table_position_independence(ab_backend):
    seq = ab_backend.tokenize("a b")
    both = ab_backend.masked_logprobs(seq, [0, 1])
    only_second = ab_backend.masked_logprobs(seq, [1])
    only_first = ab_backend.masked_logprobs(seq, [0])
    assert (only_first.logprobs[0], only_second.logprobs[0]) == both.logprobs


def test_table_missing_context_is_backend_failure(ab_backend):
    seq = ab_backend.tokenize("b b")
    with pytest.raises(BackendFailure):
        ab_backend.masked_logprobs(seq, [1])  # ("b", HOLE) has no table entry


def test_table_rejects_bad_distribution():
    with pytest.raises(ValueError):
        TableBackend(["a", "b"], {(HOLE,): {"a": 0.5, "b": 0.4}})
    with pytest.raises(ValueError):
        TableBackend(["a", "b"], {(HOLE,): {"a": 1.0, "b": 0.0}})
    with pytest.raises(ValueError):
        TableBackend(["a", "_"], {})


def test_table_invalid_positions(ab_backend):
    seq = ab_backend.tokenize("a b")
    with pytest.raises(ValueError):
        ab_backend.masked_logprobs(seq, [1, 0])
    with pytest.raises(ValueError):
        ab_backend.masked_logprobs(seq, [0, 0])
    with pytest.raises(ValueError):
        ab_backend.masked_logprobs(seq, [5])


def test_table_from_json(tmp_path):
    payload = {
        "name": "mini",
        "max_tokens": 9,
        "vocabulary": ["a", "b"],
        "conditionals": {"_ b": {"a": 0.8, "b": 0.2}, "a _": {"a": 0.3, "b": 0.7}},
    }
    path = tmp_path / "table.json"
    path.write_text(json.dumps(payload))
    backend = TableBackend.from_json(path)
    assert backend.name == "mini" and backend.max_tokens == 9
    assert pll(backend.tokenize("a b"), backend) == math.log(0.8) + math.log(0.7)


# --- unigram -------------------------------------------------------------------

def test_unigram_frequency_logprob():
    backend = unigram_backend({"a": 3, "b": 1})
    seq = backend.tokenize("a")
    vec = backend.masked_logprobs(seq, [0])
    assert vec.logprobs[0] == pytest.approx(math.log(0.75))


def test_unigram_pll_ignores_context():
    backend = unigram_backend({"a": 3, "b": 1})
    assert pll(backend.tokenize("a a"), backend) == pytest.approx(2 * math.log(0.75))


def test_unigram_unknown_token():
    backend = unigram_backend({"a": 3, "b": 1})
    seq = backend.tokenize("a z")
    with pytest.raises(UnknownToken):
        backend.masked_logprobs(seq, [0, 1])


def test_unigram_add_one_smoothing():
    backend = unigram_backend({"a": 3, "b": 1}, smoothing=True)
    seq = backend.tokenize("z")
    vec = backend.masked_logprobs(seq, [0])
    assert vec.logprobs[0] == pytest.approx(math.log(1 / (4 + 2)))


def test_unigram_rejects_empty_corpus():
    with pytest.raises(ValueError):
        unigram_backend({})
    with pytest.raises(ValueError):
        unigram_backend({"a": 0})


def test_load_counts_json_and_text(tmp_path):
    json_path = tmp_path / "counts.json"
    json_path.write_text('{"a": 3, "b": 1}')
    assert load_counts(json_path) == {"a": 3, "b": 1}
    text_path = tmp_path / "corpus.txt"
    text_path.write_text("a a a b")
    assert load_counts(text_path) == {"a": 3, "b": 1}


# --- validation of backend outputs ------------------------------------------------

class MisbehavingBackend(StubBackend):
    def __init__(self, value):
        super().__init__({"x": value})


@pytest.mark.parametrize("value", [float("nan"), float("inf"), float("-inf"), 0.5])
def test_invalid_logprobs_raise_non_finite_score(value):
    backend = MisbehavingBackend(value)
    with pytest.raises(NonFiniteScore):
        pll(backend.tokenize("x"), backend)


# --- windowing ----------------------------------------------------------------------

def test_window_starts_cover_tail():
    assert window_starts(6, 4, 2) == [0, 2]
    assert window_starts(7, 4, 2) == [0, 2, 3]
    assert window_starts(3, 4, 2) == [0]


def test_windowed_identical_when_sequence_fits(ab_backend):
    seq = ab_backend.tokenize("a b")
    direct = ab_backend.masked_logprobs(seq, [0, 1])
    windowed = windowed_masked_logprobs(ab_backend, seq, [0, 1], window=4, stride=2)
    assert windowed == direct


def test_windowed_position_five_lands_in_last_window():
    table = ProceduralTable("ab", seed=3, context_width=1)
    backend = TableBackend(["a", "b"], table, max_tokens=4)
    tokens = ("a", "b", "a", "a", "b", "a")
    seq = TokenizedSequence(
        tokens=tokens,
        surface="a b a a b a",
        scoreable_mask=(True,) * 6,
        offsets=tuple((2 * i, 2 * i + 1) for i in range(6)),
    )
    vector = windowed_masked_logprobs(backend, seq, [5], window=4, stride=2)
    # Last window is tokens[2:6]; position 5 is its final slot.
    sub = backend.tokenize("a a b a")
    expected = backend.masked_logprobs(sub, [3])
    assert vector.logprobs == expected.logprobs


def test_windowed_equals_full_for_local_table():
    # Conditionals depend only on immediate neighbors, so any window that
    # keeps a position's neighbors gives the full-sequence answer.
    table = ProceduralTable("ab", seed=11, context_width=1)
    backend = TableBackend(["a", "b"], table, max_tokens=64)
    for length in (5, 6, 7, 8, 9):
        for tokens in itertools.islice(itertools.product("ab", repeat=length), 0, None, 3):
            seq = backend.tokenize(" ".join(tokens))
            full = backend.masked_logprobs(seq, list(range(length)))
            windowed = windowed_masked_logprobs(
                backend, seq, list(range(length)), window=4, stride=2
            )
            assert windowed == full


def test_windowed_backend_wrapper_lifts_max_tokens():
    table = ProceduralTable("ab", seed=5, context_width=1)
    inner = TableBackend(["a", "b"], table, max_tokens=4)
    wrapper = WindowedBackend(inner, window=4, stride=2, max_tokens=16)
    text = " ".join("ab"[i % 2] for i in range(10))
    with pytest.raises(SequenceTooLong):
        pll(inner.tokenize(text), inner)
    assert isinstance(pll(wrapper.tokenize(text), wrapper), float)


def test_windowed_requires_offsets():
    table = ProceduralTable("ab", seed=5, context_width=1)
    backend = TableBackend(["a", "b"], table, max_tokens=4)
    seq = TokenizedSequence(
        tokens=("a", "b", "a", "b", "a", "b"),
        surface="a b a b a b",
        scoreable_mask=(True,) * 6,
        offsets=None,
    )
    with pytest.raises(BackendFailure):
        windowed_masked_logprobs(backend, seq, [0], window=4, stride=2)


def test_windowed_rejects_window_beyond_backend(ab_backend):
    seq = ab_backend.tokenize("a b")
    with pytest.raises(ValueError):
        windowed_masked_logprobs(ab_backend, seq, [0], window=ab_backend.max_tokens + 1, stride=1)
