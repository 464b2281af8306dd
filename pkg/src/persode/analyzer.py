"""Dialogue segmentation and event-emotion extraction.

A session's dialogue buffer is segmented into discrete events, then each
segment is turned into an EventRecord: a one-line summary plus emotions,
people/objects/places, hashtags, a timestamp, and a salience score.

Extraction is pluggable: a backend callable (normally an LLM adapter) maps
segment text to raw fields; when it fails, a deterministic lexicon-based
fallback takes over so the pipeline never depends on a live model. Agent
turns give context only; emotions and hashtags come from user turns alone.
"""

import importlib.resources
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import ExtractionFailed
from .memory_core import Emotion
from .textutil import (
    STOPWORDS,
    content_words,
    first_sentence,
    is_valid_hashtag,
    normalize_hashtag,
    tokenize,
)
from .timeutil import MS_PER_MINUTE

USER = "user"
AGENT = "agent"

MAX_HASHTAGS = 8
FALLBACK_HASHTAG_COUNT = 3
SALIENCE_FLOOR = 0.2
SALIENCE_PER_EMOTION = 0.2
SEGMENT_GAP_MS = 30 * MS_PER_MINUTE

# Raw extraction output before normalization; backends return this shape.
RawFields = dict

ExtractionBackend = Callable[[str], RawFields]


@dataclass(frozen=True)
class Turn:
    speaker: str  # USER or AGENT
    text: str
    at: int  # ms

    def __post_init__(self):
        if self.speaker not in (USER, AGENT):
            raise ValueError(f"unknown speaker: {self.speaker!r}")
        if not self.text.strip():
            raise ValueError("turn text must be non-empty")


@dataclass(frozen=True)
class DialogueBuffer:
    session_id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        for prev, cur in zip(self.turns, self.turns[1:]):
            if cur.at < prev.at:
                raise ValueError("turn timestamps must be non-decreasing")

    def user_turn_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.turns) if t.speaker == USER]


@dataclass(frozen=True)
class EventRecord:
    """Structured metadata for one segmented event."""

    event_summary: str
    emotions: tuple[Emotion, ...]
    people: tuple[str, ...]
    objects: tuple[str, ...]
    places: tuple[str, ...]
    hashtags: tuple[str, ...]
    occurred_at: int  # ms; first user turn of the segment
    source_turn_indices: tuple[int, ...]
    salience: float
    provenance: str = "backend"  # or "fallback"

    def __post_init__(self):
        if len(self.hashtags) > MAX_HASHTAGS:
            raise ValueError(f"more than {MAX_HASHTAGS} hashtags")
        for tag in self.hashtags:
            if not is_valid_hashtag(tag):
                raise ValueError(f"malformed hashtag: {tag!r}")
        if len(set(self.hashtags)) != len(self.hashtags):
            raise ValueError("duplicate hashtags")
        if not 0.0 <= self.salience <= 1.0:
            raise ValueError("salience must be in [0,1]")

    @property
    def top_emotion(self) -> str | None:
        if not self.emotions:
            return None
        return min(self.emotions, key=lambda e: (-e.intensity, e.label)).label


@dataclass(frozen=True)
class ExtractedFields:
    """Normalized extraction output, not yet bound to a segment."""

    emotions: tuple[Emotion, ...] = ()
    people: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()
    places: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    salience: float = SALIENCE_FLOOR
    event_summary: str = ""


@dataclass(frozen=True)
class EmotionLexicon:
    """keyword -> (emotion label, base intensity); keys are lowercase."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for keyword, (label, intensity) in self.entries.items():
            if keyword != keyword.lower():
                raise ValueError(f"lexicon keyword not lowercase: {keyword!r}")
            if not 0.0 < intensity <= 1.0:
                raise ValueError(f"intensity for {keyword!r} must be in (0,1]")


def load_lexicon(path: Path | None = None) -> EmotionLexicon:
    """Parse a lexicon file: one `keyword<TAB>label<TAB>intensity` per line,
    UTF-8, '#' comments. Defaults to the built-in English lexicon."""
    if path is None:
        text = (
            importlib.resources.files("persode.data").joinpath("lexicon.tsv").read_text("utf-8")
        )
    else:
        text = Path(path).read_text("utf-8")
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"lexicon line {lineno}: expected 3 tab-separated fields")
        keyword, label, intensity = parts
        entries[keyword.strip().lower()] = (label.strip(), float(intensity))
    return EmotionLexicon(entries)


def _topic_shift(previous: str, current: str) -> bool:
    """Fallback topic-shift signal: zero content-word overlap.

    Fires only when both turns have content words; otherwise there is no
    lexical evidence either way.
    """
    prev_words = set(content_words(previous))
    cur_words = set(content_words(current))
    return bool(prev_words) and bool(cur_words) and not (prev_words & cur_words)


def segment_events(
    buffer: DialogueBuffer,
    topic_shift: Callable[[str, str], bool] = _topic_shift,
) -> list[tuple[int, int]]:
    """Split the buffer into half-open turn-index ranges, one per event.

    A new segment starts when the gap between consecutive user turns exceeds
    30 minutes or the topic-shift signal fires. Ranges are disjoint, ordered,
    and together cover every user turn.
    """
    user_indices = buffer.user_turn_indices()
    if not user_indices:
        raise ValueError("buffer has no user turns to analyze")
    groups: list[list[int]] = [[user_indices[0]]]
    for prev_i, cur_i in zip(user_indices, user_indices[1:]):
        prev, cur = buffer.turns[prev_i], buffer.turns[cur_i]
        if (cur.at - prev.at) > SEGMENT_GAP_MS or topic_shift(prev.text, cur.text):
            groups.append([cur_i])
        else:
            groups[-1].append(cur_i)
    return [(g[0], g[-1] + 1) for g in groups]


def fallback_extract(text: str, lexicon: EmotionLexicon) -> ExtractedFields:
    """Deterministic rule-based extraction.

    Emotions are lexicon hits deduplicated by label (max intensity wins);
    hashtags are the three most frequent content words that are not lexicon
    keywords, CamelCased; salience rewards emotional richness with a 0.2
    floor. People/objects/places need entity knowledge the rules don't have,
    so they stay empty.
    """
    if not text.strip():
        raise ValueError("cannot extract from empty text")
    tokens = tokenize(text)

    by_label: dict[str, float] = {}
    order: list[str] = []
    for token in tokens:
        hit = lexicon.entries.get(token)
        if hit is None:
            continue
        label, intensity = hit
        if label not in by_label:
            order.append(label)
            by_label[label] = intensity
        else:
            by_label[label] = max(by_label[label], intensity)
    emotions = tuple(Emotion(label, by_label[label]) for label in order)

    counts = Counter()
    first_seen: dict[str, int] = {}
    for i, token in enumerate(tokens):
        if token in STOPWORDS or token in lexicon.entries or len(token) < 3:
            continue
        counts[token] += 1
        first_seen.setdefault(token, i)
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    hashtags = []
    for token in ranked[:FALLBACK_HASHTAG_COUNT]:
        tag = normalize_hashtag(token)
        if tag:
            hashtags.append(tag)

    salience = min(1.0, SALIENCE_FLOOR + SALIENCE_PER_EMOTION * len(emotions))
    return ExtractedFields(emotions=emotions, hashtags=tuple(hashtags), salience=salience)


def _clamp01(value) -> float:
    return min(1.0, max(0.0, float(value)))


def normalize_fields(raw: RawFields) -> ExtractedFields:
    """Shape untrusted backend output into valid ExtractedFields.

    Intensities and salience are clamped to [0,1], hashtags re-normalized and
    deduplicated, string lists stripped. Raises ExtractionFailed on
    structurally unusable input.
    """
    if not isinstance(raw, dict):
        raise ExtractionFailed(f"extraction output is not an object: {type(raw).__name__}")
    try:
        by_label: dict[str, float] = {}
        order: list[str] = []
        for item in raw.get("emotions", []):
            if isinstance(item, dict):
                label, intensity = item["label"], item["intensity"]
            else:
                label, intensity = item  # (label, intensity) pair
            label = str(label).strip().lower()
            if not label:
                continue
            intensity = _clamp01(intensity)
            if label not in by_label:
                order.append(label)
                by_label[label] = intensity
            else:
                by_label[label] = max(by_label[label], intensity)
        emotions = tuple(Emotion(label, by_label[label]) for label in order)

        def str_list(key: str) -> tuple[str, ...]:
            seen = []
            for value in raw.get(key, []):
                text = str(value).strip()
                if text and text not in seen:
                    seen.append(text)
            return tuple(seen)

        hashtags: list[str] = []
        for value in raw.get("hashtags", []):
            tag = normalize_hashtag(str(value))
            if tag and tag not in hashtags:
                hashtags.append(tag)

        salience = _clamp01(raw.get("salience", SALIENCE_FLOOR))
        summary = str(raw.get("event_summary", "")).strip()
        return ExtractedFields(
            emotions=emotions,
            people=str_list("people"),
            objects=str_list("objects"),
            places=str_list("places"),
            hashtags=tuple(hashtags[:MAX_HASHTAGS]),
            salience=salience,
            event_summary=summary,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ExtractionFailed(f"unusable extraction output: {exc}") from exc


def extract_metadata(
    buffer: DialogueBuffer,
    segment: tuple[int, int],
    backend: ExtractionBackend | None = None,
    lexicon: EmotionLexicon | None = None,
    allow_fallback: bool = True,
) -> EventRecord:
    """Build the EventRecord for one segment.

    The backend (if any) sees the segment's user text; on any extraction
    failure the lexicon fallback takes over and the record is marked
    accordingly. occurred_at is the segment's first user turn timestamp.
    """
    start, end = segment
    user_indices = [
        i for i in range(start, end) if buffer.turns[i].speaker == USER
    ]
    if not user_indices:
        raise ValueError("segment contains no user turns")
    text = "\n".join(buffer.turns[i].text for i in user_indices)

    fields = None
    provenance = "backend"
    if backend is not None:
        try:
            fields = normalize_fields(backend(text))
        except ExtractionFailed:
            if not allow_fallback:
                raise
    if fields is None:
        if not allow_fallback:
            raise ExtractionFailed("no extraction backend configured")
        if lexicon is None:
            lexicon = load_lexicon()
        fields = fallback_extract(text, lexicon)
        provenance = "fallback"

    summary = fields.event_summary or first_sentence(text)
    return EventRecord(
        event_summary=summary,
        emotions=fields.emotions,
        people=fields.people,
        objects=fields.objects,
        places=fields.places,
        hashtags=fields.hashtags,
        occurred_at=buffer.turns[user_indices[0]].at,
        source_turn_indices=tuple(user_indices),
        salience=fields.salience,
        provenance=provenance,
    )
