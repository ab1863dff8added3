from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from reqboard.dedup import (
    JaccardScorer,
    NgramIndex,
    Verdict,
    ngrams,
    normalize,
    similarity,
)
from reqboard.errors import ForumError

# Frozen with the brute-force gram enumerator below before implementation:
# grams("abcd") = {abc, bcd}, grams("abce") = {abc, bce} -> 1/3.
# The near-threshold pair scores 32/56 = 4/7, i.e. just under 0.6.
NEAR_PAIR_A = "support exporting reports as csv files"
NEAR_PAIR_B = "support exporting reports as csv files daily weekly digest emails"
NEAR_PAIR_SCORE = 4 / 7


def oracle_screen(corpus, text, n, threshold):
    """Full-scan Jaccard oracle, re-deriving grams from scratch."""

    def norm(t):
        return " ".join(t.lower().split())

    def grams(t):
        t = norm(t)
        if len(t) < n:
            return set()
        return {t[i : i + n] for i in range(len(t) - n + 1)}

    cand = grams(text)
    scored = []
    for tid, stored in corpus:
        g = grams(stored)
        if not cand and not g:
            s = 1.0
        elif not cand or not g:
            s = 0.0
        else:
            s = len(cand & g) / len(cand | g)
        scored.append((tid, s))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    nearest = scored[:3]
    rejected = bool(nearest) and nearest[0][1] >= threshold
    return ("REJECTED" if rejected else "ACCEPTED"), nearest


def test_normalize_rules():
    assert normalize("  Add   DARK mode ") == "add dark mode"
    assert normalize("") == ""
    assert normalize("AbC") == "abc"
    assert normalize("keep, punct!") == "keep, punct!"


@given(st.text(max_size=80))
def test_normalize_idempotent(text):
    assert normalize(normalize(text)) == normalize(text)


def test_trigram_enumeration():
    assert ngrams("abcd", 3) == {"abc", "bcd"}
    assert ngrams("ab", 3) == frozenset()
    assert ngrams("a", 1) == {"a"}


def test_similarity_hand_checked_third():
    assert abs(similarity("abcd", "abce", 3) - 1 / 3) < 1e-12


def test_similarity_identity_and_disjoint():
    for s in ("abcd", "a topic about caching", "xy"):
        assert similarity(s, s) == 1.0
    assert similarity("abcdef", "uvwxyz", 3) == 0.0


def test_similarity_empty_conventions():
    assert similarity("", "") == 1.0
    assert similarity("", "abcdef") == 0.0
    assert similarity("ab", "ab", 3) == 1.0  # both gram sets empty at n=3


@given(st.text(max_size=60), st.text(max_size=60))
def test_similarity_symmetric_and_bounded(a, b):
    s = similarity(a, b)
    assert s == similarity(b, a)
    assert 0.0 <= s <= 1.0


def test_near_threshold_pair_frozen_score():
    assert abs(similarity(NEAR_PAIR_A, NEAR_PAIR_B, 3) - NEAR_PAIR_SCORE) < 1e-12


def test_screen_identical_rejects():
    index = NgramIndex()
    index.insert("t1", "dark mode for the editor")
    result = index.screen("dark mode for the editor", 0.6)
    assert result.verdict is Verdict.REJECTED
    assert result.nearest[0] == ("t1", 1.0)


def test_screen_empty_corpus_accepts():
    index = NgramIndex()
    result = index.screen("anything at all", 0.6)
    assert result.verdict is Verdict.ACCEPTED
    assert result.nearest == ()


def test_screen_near_threshold_accepts():
    index = NgramIndex()
    index.insert("t1", NEAR_PAIR_A)
    result = index.screen(NEAR_PAIR_B, 0.6)
    assert result.verdict is Verdict.ACCEPTED
    assert result.nearest[0][0] == "t1"
    assert abs(result.nearest[0][1] - NEAR_PAIR_SCORE) < 1e-12


def test_screen_at_threshold_rejects():
    index = NgramIndex()
    index.insert("t1", NEAR_PAIR_A)
    result = index.screen(NEAR_PAIR_B, NEAR_PAIR_SCORE)
    assert result.verdict is Verdict.REJECTED


def test_index_remove_and_double_insert():
    index = NgramIndex()
    index.insert("t1", "searchable archive of decisions")
    index.insert("t1", "searchable archive of decisions")
    assert len(index) == 1
    index.remove("t1")
    assert "t1" not in index
    assert index.screen("searchable archive of decisions", 0.6).verdict is Verdict.ACCEPTED
    with pytest.raises(ForumError) as err:
        index.remove("t1")
    assert err.value.code == "NOT_FOUND"


def test_screen_validates_threshold():
    index = NgramIndex()
    with pytest.raises(ValueError):
        index.screen("x", 0.0)
    with pytest.raises(ValueError):
        index.screen("x", 1.5)


def test_empty_profile_topics_still_match_empty_candidates():
    index = NgramIndex()
    index.insert("t-empty", "  ")
    index.insert("t-full", "an actual topic body")
    result = index.screen("", 0.5)
    assert result.verdict is Verdict.REJECTED
    assert result.nearest[0] == ("t-empty", 1.0)
    assert ("t-full", 0.0) in result.nearest


WORDS = (
    "cache index search export import filter sort merge split badge "
    "profile session token quota limit audit replay topic post poll vote "
    "chart alert backup restore locale theme editor preview draft"
).split()


def random_sentence(rng: random.Random) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randrange(3, 14)))


def test_indexed_screen_matches_full_scan_oracle():
    rng = random.Random(99)
    index = NgramIndex(JaccardScorer(3))
    corpus: list[tuple[str, str]] = []
    specials = ["", "ab", "  spaced   out  "]
    for i in range(80):
        text = specials[i] if i < len(specials) else random_sentence(rng)
        candidate_texts = [text, random_sentence(rng), ""]
        for cand in candidate_texts:
            got = index.screen(cand, 0.5)
            want_verdict, want_nearest = oracle_screen(corpus, cand, 3, 0.5)
            assert got.verdict.value == want_verdict, (cand, corpus)
            assert list(got.nearest) == want_nearest, (cand, corpus)
        tid = f"t{i:03d}"
        index.insert(tid, text)
        corpus.append((tid, text))


def test_rejected_iff_max_reaches_threshold():
    rng = random.Random(5)
    index = NgramIndex()
    corpus = []
    for i in range(40):
        text = random_sentence(rng)
        tid = f"t{i:03d}"
        index.insert(tid, text)
        corpus.append((tid, text))
    for _ in range(60):
        cand = random_sentence(rng)
        result = index.screen(cand, 0.35)
        best = max(similarity(cand, text) for _, text in corpus)
        assert (result.verdict is Verdict.REJECTED) == (best >= 0.35)
        assert len(result.nearest) == 3
