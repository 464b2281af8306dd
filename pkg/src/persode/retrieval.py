"""Memory selection: similarity x strength ranking with term-aware gating.

Candidates are scored as combined = max(0, cosine) * strength, so a memory
surfaces only when it is both relevant to the current context and still
strong. Short-term memories (within the six-day window) are always eligible;
long-term ones must clear the forget threshold. Ties break by newest
creation, then id, making the ranking a total order.

Corpora are per-user and small, so the production path is an exhaustive
scan; brute_force_select is an independently coded scan kept for
equivalence testing against it.
"""

import json
import math
from dataclasses import dataclass
from heapq import nsmallest
from typing import Protocol, Sequence

from .memory_core import MemoryFragment, MemoryTerm, ScoringParams, classify_term, memory_strength
from .textutil import fnv1a64, tokenize

DEFAULT_DIMENSION = 64
DEFAULT_K = 3


class Embedder(Protocol):
    dimension: int

    def embed(self, text: str) -> tuple[float, ...]: ...


class HashedBagEmbedder:
    """Hashed bag-of-words embedder: deterministic, offline, order-free.

    Tokens hash (FNV-1a) into `dimension` buckets; bucket counts are then
    L2-normalized. A real embedding provider can replace this behind the
    same interface.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def embed(self, text: str) -> tuple[float, ...]:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        counts = [0.0] * self.dimension
        tokens = tokenize(text) or [text.strip().lower()]
        for token in tokens:
            counts[fnv1a64(token.encode("utf-8")) % self.dimension] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        return tuple(c / norm for c in counts)


def embed_text(text: str, embedder: Embedder) -> tuple[float, ...]:
    """Embed text and verify the unit-norm contract."""
    vector = embedder.embed(text)
    norm = math.sqrt(sum(x * x for x in vector))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"embedder returned non-unit vector (norm={norm})")
    return vector


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Dot product of two unit vectors."""
    if len(u) != len(v):
        raise ValueError(f"dimension mismatch: {len(u)} vs {len(v)}")
    return sum(a * b for a, b in zip(u, v))


def similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine clamped at zero: anti-relevant memories never rank."""
    return max(0.0, cosine(u, v))


@dataclass(frozen=True)
class RetrievalQuery:
    user_id: str
    context_text: str  # concatenated recent user turns
    k: int = DEFAULT_K
    now: int = 0  # ms

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.context_text.strip():
            raise ValueError("context_text must be non-empty")


@dataclass(frozen=True)
class RankedMemory:
    fragment_id: str
    similarity: float
    strength: float
    combined: float
    term: MemoryTerm
    created_at: int

    def to_dict(self) -> dict:
        return {
            "id": self.fragment_id,
            "similarity": self.similarity,
            "strength": self.strength,
            "combined": self.combined,
            "term": self.term.value,
        }


def _rank_key(ranked: RankedMemory) -> tuple:
    # sort order: combined desc, created_at desc, id asc
    return (-ranked.combined, -ranked.created_at, ranked.fragment_id)


def _score(
    fragment: MemoryFragment,
    query_vector: tuple[float, ...],
    params: ScoringParams,
    now: int,
) -> RankedMemory:
    sim = similarity(query_vector, fragment.embedding)
    strength = memory_strength(fragment, params, now)
    return RankedMemory(
        fragment_id=fragment.id,
        similarity=sim,
        strength=strength,
        combined=sim * strength,
        term=classify_term(fragment, params, now),
        created_at=fragment.created_at,
    )


def _eligible(ranked: RankedMemory, params: ScoringParams) -> bool:
    # short-term memories bypass the forget threshold entirely
    if ranked.term is MemoryTerm.SHORT_TERM:
        return True
    return ranked.strength >= params.forget_threshold


def select_memories(
    query: RetrievalQuery,
    corpus: Sequence[MemoryFragment],
    params: ScoringParams,
    embedder: Embedder,
) -> list[RankedMemory]:
    """Top-k eligible memories for the query context.

    The caller is responsible for registering a recall on each returned
    fragment once it is actually used in a reply.
    """
    if not corpus:
        return []
    query_vector = embed_text(query.context_text, embedder)
    candidates = (
        _score(fragment, query_vector, params, query.now) for fragment in corpus
    )
    eligible = (r for r in candidates if _eligible(r, params))
    return nsmallest(query.k, eligible, key=_rank_key)


def brute_force_select(
    query: RetrievalQuery,
    corpus: Sequence[MemoryFragment],
    params: ScoringParams,
    embedder: Embedder,
) -> list[RankedMemory]:
    """Oracle twin of select_memories: score everything, sort, slice."""
    if not corpus:
        return []
    query_vector = embed_text(query.context_text, embedder)
    scored = [_score(fragment, query_vector, params, query.now) for fragment in corpus]
    kept = []
    for ranked in scored:
        if ranked.term is MemoryTerm.SHORT_TERM or ranked.strength >= params.forget_threshold:
            kept.append(ranked)
    kept.sort(key=_rank_key)
    return kept[: query.k]


def dump_ranked(ranked: Sequence[RankedMemory]) -> str:
    """Debug dump: ranked list as a JSON array."""
    return json.dumps([r.to_dict() for r in ranked], sort_keys=True)
