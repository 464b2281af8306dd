"""Randomized retrieval corpora and the oracle equivalence check.

Generates per-user corpora with randomized emotions, recall counts,
salience, ages, and texts, then asserts that the production selection path
and the brute-force oracle agree element-wise (ids, order, and scores).
Used by both the acceptance suite and the `oracle-check` CLI subcommand.
"""

import random
from dataclasses import dataclass

from .memory_core import Emotion, MemoryFragment, ScoringParams
from .retrieval import (
    Embedder,
    HashedBagEmbedder,
    RetrievalQuery,
    brute_force_select,
    embed_text,
    select_memories,
)
from .timeutil import MS_PER_DAY

_WORDS = (
    "graduation park rain ocean exam party train picnic museum concert "
    "garden birthday soccer library beach snow market festival movie hike "
    "kitchen puppy bicycle letter storm sunrise airport painting guitar "
    "dinner friend teacher sister brother coffee camping harvest lantern"
).split()

_EMOTION_LABELS = ("joy", "sadness", "anger", "fear", "surprise", "calm", "pride")

QUERY_TIME_MS = 1_700_000_000_000  # fixed evaluation instant for generated corpora


def random_fragment(rng: random.Random, user_id: str, index: int, embedder: Embedder) -> MemoryFragment:
    text = " ".join(rng.choices(_WORDS, k=rng.randint(2, 6)))
    emotions = tuple(
        Emotion(label, round(rng.random(), 6))
        for label in rng.sample(_EMOTION_LABELS, k=rng.randint(0, 3))
    )
    age_days = rng.uniform(0.0, 60.0)
    created_at = QUERY_TIME_MS - int(age_days * MS_PER_DAY)
    return MemoryFragment(
        id=f"f{index:05d}",
        user_id=user_id,
        event_summary=text,
        emotions=emotions,
        recall_count=rng.randint(0, 15),
        last_recalled_at=None,
        relevance=round(rng.random(), 6),
        created_at=created_at,
        hashtags=(),
        embedding=embed_text(text, embedder),
    )


def random_corpus(
    rng: random.Random, embedder: Embedder, max_size: int = 200
) -> list[MemoryFragment]:
    return [
        random_fragment(rng, "oracle-user", i, embedder)
        for i in range(rng.randint(1, max_size))
    ]


def random_query(rng: random.Random) -> RetrievalQuery:
    return RetrievalQuery(
        user_id="oracle-user",
        context_text=" ".join(rng.choices(_WORDS, k=rng.randint(1, 5))),
        k=rng.randint(1, 8),
        now=QUERY_TIME_MS,
    )


@dataclass
class OracleReport:
    corpora: int
    fragments: int
    mismatches: list[str]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def run_oracle_check(
    corpora: int = 100,
    seed: int = 2024,
    max_size: int = 200,
    score_tolerance: float = 1e-12,
) -> OracleReport:
    """Compare select_memories against brute_force_select over random corpora."""
    rng = random.Random(seed)
    embedder = HashedBagEmbedder()
    params = ScoringParams()
    mismatches: list[str] = []
    total = 0
    for case in range(corpora):
        corpus = random_corpus(rng, embedder, max_size)
        total += len(corpus)
        query = random_query(rng)
        fast = select_memories(query, corpus, params, embedder)
        slow = brute_force_select(query, corpus, params, embedder)
        if len(fast) != len(slow):
            mismatches.append(f"case {case}: lengths {len(fast)} vs {len(slow)}")
            continue
        for rank, (a, b) in enumerate(zip(fast, slow)):
            if a.fragment_id != b.fragment_id:
                mismatches.append(
                    f"case {case} rank {rank}: id {a.fragment_id} vs {b.fragment_id}"
                )
                break
            for attr in ("similarity", "strength", "combined"):
                if abs(getattr(a, attr) - getattr(b, attr)) > score_tolerance:
                    mismatches.append(f"case {case} rank {rank}: {attr} differs")
                    break
    return OracleReport(corpora=corpora, fragments=total, mismatches=mismatches)
