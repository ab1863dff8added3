"""Near-duplicate screening for candidate topics.

Similarity is the Jaccard coefficient over character n-gram sets of
normalized text (default n=3). A candidate is rejected when its highest
similarity against any previously indexed topic reaches the configured
threshold. The inverted gram index is purely an accelerator: screening
through it must give exactly the verdict and nearest list a full scan would.

The measure sits behind the small ``JaccardScorer`` surface so another
string-similarity measure can be swapped in without touching callers.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import ForumError

_WHITESPACE_RUN = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace runs to single spaces, trim the ends.

    Punctuation is kept: it carries signal in short technical text.
    Idempotent: normalize(normalize(s)) == normalize(s).
    """
    return _WHITESPACE_RUN.sub(" ", text.lower()).strip()


def ngrams(text: str, n: int) -> frozenset[str]:
    """Set of character n-grams of ``text`` (no normalization applied here)."""
    if n < 1:
        raise ValueError("gram size must be >= 1")
    if len(text) < n:
        return frozenset()
    return frozenset(text[i : i + n] for i in range(len(text) - n + 1))


class JaccardScorer:
    """Character n-gram Jaccard similarity on normalized text."""

    def __init__(self, n: int = 3):
        if n < 1:
            raise ValueError("gram size must be >= 1")
        self.n = n

    def profile(self, text: str) -> frozenset[str]:
        return ngrams(normalize(text), self.n)

    def score(self, a: frozenset[str], b: frozenset[str]) -> float:
        """|a ∩ b| / |a ∪ b|; 1.0 for two empty profiles, 0.0 for exactly one."""
        if not a and not b:
            return 1.0
        if not a or not b:
            return 0.0
        return len(a & b) / len(a | b)


def similarity(a: str, b: str, n: int = 3) -> float:
    """Jaccard similarity of two texts' n-gram sets. Symmetric, in [0, 1]."""
    scorer = JaccardScorer(n)
    return scorer.score(scorer.profile(a), scorer.profile(b))


class Verdict(Enum):
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"


@dataclass(frozen=True)
class ScreenResult:
    """Outcome of screening one candidate against the indexed corpus."""

    verdict: Verdict
    nearest: tuple[tuple[str, float], ...]  # up to 3 (topic id, score), best first
    threshold: float

    @property
    def rejected(self) -> bool:
        return self.verdict is Verdict.REJECTED

    def to_doc(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "nearest": [{"topic_id": tid, "score": score} for tid, score in self.nearest],
            "threshold": self.threshold,
        }


class NgramIndex:
    """Inverted gram index over topic profiles.

    Postings map each gram to the topic ids containing it, which prunes the
    pairwise scan to topics sharing at least one gram. Topics whose profile
    is empty are tracked separately so they still screen correctly (two
    empty profiles count as identical).
    """

    def __init__(self, scorer: JaccardScorer | None = None):
        self.scorer = scorer or JaccardScorer()
        self._profiles: dict[str, frozenset[str]] = {}
        self._postings: dict[str, set[str]] = {}
        self._empty: set[str] = set()

    def __len__(self) -> int:
        return len(self._profiles)

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self._profiles

    def insert(self, topic_id: str, text: str) -> None:
        """Add or replace a topic's profile; subsequent screens see it."""
        if topic_id in self._profiles:
            self.remove(topic_id)
        profile = self.scorer.profile(text)
        self._profiles[topic_id] = profile
        if not profile:
            self._empty.add(topic_id)
        for gram in profile:
            self._postings.setdefault(gram, set()).add(topic_id)

    def remove(self, topic_id: str) -> None:
        profile = self._profiles.pop(topic_id, None)
        if profile is None:
            raise ForumError("NOT_FOUND", f"topic {topic_id!r} is not indexed")
        self._empty.discard(topic_id)
        for gram in profile:
            bucket = self._postings.get(gram)
            if bucket is not None:
                bucket.discard(topic_id)
                if not bucket:
                    del self._postings[gram]

    def rebuild(self, entries: Iterable[tuple[str, str]]) -> None:
        self._profiles.clear()
        self._postings.clear()
        self._empty.clear()
        for topic_id, text in entries:
            self.insert(topic_id, text)

    def screen(self, text: str, threshold: float) -> ScreenResult:
        """Score ``text`` against every indexed topic.

        ACCEPTED iff the maximum similarity stays below ``threshold``. The
        nearest list carries up to three best matches (ties broken by topic
        id) and is populated whenever the corpus is non-empty.
        """
        if not (0 < threshold <= 1):
            raise ValueError("threshold must be in (0, 1]")
        candidate = self.scorer.profile(text)

        scores: dict[str, float] = {}
        if candidate:
            overlap: Counter[str] = Counter()
            for gram in candidate:
                for tid in self._postings.get(gram, ()):
                    overlap[tid] += 1
            for tid, inter in overlap.items():
                union = len(candidate) + len(self._profiles[tid]) - inter
                scores[tid] = inter / union
        else:
            for tid in self._empty:
                scores[tid] = 1.0

        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        nearest = ranked[:3]
        if len(nearest) < 3:
            # Everything the postings never touched scored exactly 0.0; fill
            # remaining slots in the same (-score, id) order a full scan uses.
            untouched = sorted(tid for tid in self._profiles if tid not in scores)
            nearest.extend((tid, 0.0) for tid in untouched[: 3 - len(nearest)])

        rejected = bool(nearest) and nearest[0][1] >= threshold
        return ScreenResult(
            verdict=Verdict.REJECTED if rejected else Verdict.ACCEPTED,
            nearest=tuple(nearest),
            threshold=threshold,
        )
