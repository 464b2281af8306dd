"""Memory strength scoring and decay.

A stored memory's strength is an exponentially decayed, normalized weighted
average of three [0,1] signals: emotional intensity (peak emotion), recall
frequency (saturating count), and contextual relevance (salience fixed at
storage time):

    strength = exp(-decay_rate * age_days)
               * (w_emotion*E + w_recall*R + w_relevance*C) / (sum of weights)

The default decay rate is calibrated so strength falls by 75% across the
six-day short-term window; memories at most six days old are classified
short-term and are always retrieval-eligible regardless of strength.

All operations are pure functions over immutable values; callers inject the
clock (ms timestamps), so nothing here reads wall time.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .timeutil import days_between

# Recall counts saturate here: R = min(1, recall_count / RECALL_SATURATION),
# keeping recall frequency commensurate with the other [0,1] signals.
RECALL_SATURATION = 10

# Decay rate giving a 75% strength drop over the six-day short-term window.
DEFAULT_DECAY_RATE = math.log(4) / 6.0

EMBEDDING_NORM_TOL = 1e-9


class MemoryTerm(Enum):
    SHORT_TERM = "short"
    LONG_TERM = "long"


@dataclass(frozen=True)
class ScoringParams:
    """Weights and time constants for memory strength scoring."""

    emotion_weight: float = 1.0
    recall_weight: float = 1.0
    relevance_weight: float = 1.0
    decay_rate: float = DEFAULT_DECAY_RATE  # per day
    short_term_days: float = 6.0
    forget_threshold: float = 0.05

    def __post_init__(self):
        for name in ("emotion_weight", "recall_weight", "relevance_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.weight_sum() <= 0:
            raise ValueError("at least one scoring weight must be positive")
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be positive")
        if self.short_term_days <= 0:
            raise ValueError("short_term_days must be positive")
        if not 0.0 <= self.forget_threshold < 1.0:
            raise ValueError("forget_threshold must be in [0, 1)")

    def weight_sum(self) -> float:
        return self.emotion_weight + self.recall_weight + self.relevance_weight


@dataclass(frozen=True)
class Emotion:
    label: str
    intensity: float  # [0, 1]


@dataclass(frozen=True)
class MemoryFragment:
    """One stored episodic memory and its scoring inputs."""

    id: str
    user_id: str
    event_summary: str
    emotions: tuple[Emotion, ...] = ()
    recall_count: int = 0
    last_recalled_at: int | None = None  # ms
    relevance: float = 0.0  # salience fixed by the analyzer at storage time
    created_at: int = 0  # ms
    hashtags: tuple[str, ...] = ()
    people: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()
    places: tuple[str, ...] = ()
    embedding: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        for emo in self.emotions:
            if not 0.0 <= emo.intensity <= 1.0:
                raise ValueError(f"emotion intensity out of [0,1]: {emo}")
        if not 0.0 <= self.relevance <= 1.0:
            raise ValueError("relevance must be in [0,1]")
        if self.recall_count < 0:
            raise ValueError("recall_count must be non-negative")
        for tag in self.hashtags:
            if not tag.startswith("#"):
                raise ValueError(f"hashtag missing '#' prefix: {tag!r}")
        if self.embedding is not None:
            norm = math.sqrt(sum(x * x for x in self.embedding))
            if abs(norm - 1.0) > EMBEDDING_NORM_TOL:
                raise ValueError(f"embedding norm {norm} not within {EMBEDDING_NORM_TOL} of 1")

    @property
    def emotional_intensity(self) -> float:
        """Peak emotion intensity; 0 when no emotions were extracted."""
        return max((e.intensity for e in self.emotions), default=0.0)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "user_id": self.user_id,
            "event_summary": self.event_summary,
            "emotions": [{"label": e.label, "intensity": e.intensity} for e in self.emotions],
            "recall_count": self.recall_count,
            "last_recalled_at": self.last_recalled_at,
            "relevance": self.relevance,
            "created_at": self.created_at,
            "hashtags": list(self.hashtags),
            "people": list(self.people),
            "objects": list(self.objects),
            "places": list(self.places),
            "embedding": list(self.embedding) if self.embedding is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MemoryFragment":
        embedding = data.get("embedding")
        return cls(
            id=data["id"],
            user_id=data["user_id"],
            event_summary=data["event_summary"],
            emotions=tuple(Emotion(e["label"], e["intensity"]) for e in data["emotions"]),
            recall_count=data["recall_count"],
            last_recalled_at=data.get("last_recalled_at"),
            relevance=data["relevance"],
            created_at=data["created_at"],
            hashtags=tuple(data["hashtags"]),
            people=tuple(data.get("people", [])),
            objects=tuple(data.get("objects", [])),
            places=tuple(data.get("places", [])),
            embedding=tuple(embedding) if embedding is not None else None,
        )

    @property
    def top_emotion(self) -> str | None:
        """Label of the strongest emotion; alphabetical tie-break."""
        if not self.emotions:
            return None
        return min(self.emotions, key=lambda e: (-e.intensity, e.label)).label


def recall_frequency(recall_count: int) -> float:
    """Normalized recall frequency: saturates at RECALL_SATURATION recalls."""
    return min(1.0, recall_count / RECALL_SATURATION)


def decay_factor(delta_t_days: float, params: ScoringParams) -> float:
    """Exponential time decay exp(-decay_rate * age); 1.0 at age zero."""
    if delta_t_days < 0:
        raise ValueError(f"negative elapsed time: {delta_t_days}")
    return math.exp(-params.decay_rate * delta_t_days)


def memory_strength(fragment: MemoryFragment, params: ScoringParams, now: int) -> float:
    """Current strength of a fragment in [0,1]; see module docstring."""
    if now < fragment.created_at:
        raise ValueError("evaluation time precedes fragment creation")
    decayed = decay_factor(days_between(fragment.created_at, now), params)
    weighted = (
        params.emotion_weight * fragment.emotional_intensity
        + params.recall_weight * recall_frequency(fragment.recall_count)
        + params.relevance_weight * fragment.relevance
    )
    return decayed * weighted / params.weight_sum()


def register_recall(fragment: MemoryFragment, now: int) -> MemoryFragment:
    """Return a copy with the recall recorded; all other fields unchanged."""
    if now < fragment.created_at:
        raise ValueError("recall time precedes fragment creation")
    return replace(fragment, recall_count=fragment.recall_count + 1, last_recalled_at=now)


def classify_term(fragment: MemoryFragment, params: ScoringParams, now: int) -> MemoryTerm:
    """Short-term while age <= short_term_days (inclusive), long-term after."""
    if now < fragment.created_at:
        raise ValueError("evaluation time precedes fragment creation")
    age_days = days_between(fragment.created_at, now)
    return MemoryTerm.SHORT_TERM if age_days <= params.short_term_days else MemoryTerm.LONG_TERM
