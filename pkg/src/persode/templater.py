"""Diary-text and image prompt construction, and diary entry composition.

Two fixed templates (versioned data files with {{slot}} placeholders) turn
extracted events plus the user's persona into:

  * a diary prompt: style directives, a first-person framing instruction,
    each event's summary with its top emotion, a word limit, and a trailing
    hashtag line;
  * an image prompt: few-shot exemplar pairs followed by a compact input
    block rendering character (appearance + age band), scene, mood, and
    background style.

All three operations are pure; identical inputs give byte-identical output.
User-derived text only ever appears inside [[...]] delimiters, with
delimiter sequences in the text itself defused.
"""

import importlib.resources
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .analyzer import EventRecord
from .persona import Preferences, StylePrompt

SCHEMA_VERSION = 1

DIARY_WORD_LIMIT = 180

MIN_EXEMPLARS = 2
MAX_EXEMPLARS = 5

NEUTRAL_MOOD = "reflective"


@dataclass(frozen=True)
class FewShotExemplar:
    input_summary: str
    output_prompt: str


@dataclass(frozen=True)
class DiaryEntry:
    """Composed journal artifact; immutable once created."""

    id: str
    user_id: str
    diary_text: str
    image_prompt: str
    image_ref: str | None
    source_event_ids: tuple[str, ...]
    created_at: int  # ms
    hashtags: tuple[str, ...]

    def __post_init__(self):
        if not self.source_event_ids:
            raise ValueError("source_event_ids must be non-empty")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "user_id": self.user_id,
            "diary_text": self.diary_text,
            "image_prompt": self.image_prompt,
            "image_ref": self.image_ref,
            "source_event_ids": list(self.source_event_ids),
            "created_at": self.created_at,
            "hashtags": list(self.hashtags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiaryEntry":
        return cls(
            id=data["id"],
            user_id=data["user_id"],
            diary_text=data["diary_text"],
            image_prompt=data["image_prompt"],
            image_ref=data.get("image_ref"),
            source_event_ids=tuple(data["source_event_ids"]),
            created_at=data["created_at"],
            hashtags=tuple(data["hashtags"]),
        )


@lru_cache(maxsize=None)
def _template(name: str) -> str:
    return (
        importlib.resources.files("persode.data")
        .joinpath("templates")
        .joinpath(name)
        .read_text("utf-8")
    )


def _render(template: str, slots: dict) -> str:
    out = template
    for name, value in slots.items():
        out = out.replace("{{" + name + "}}", value)
    return out


def quote_user_text(text: str) -> str:
    """Wrap user-derived text in delimiters, defusing any it contains."""
    defused = text.replace("[[", "[ [").replace("]]", "] ]")
    return f"[[{defused}]]"


def load_exemplars(path=None) -> tuple[FewShotExemplar, ...]:
    """Load the few-shot exemplar set (JSON array, 2 to 5 entries)."""
    if path is None:
        text = (
            importlib.resources.files("persode.data").joinpath("exemplars.json").read_text("utf-8")
        )
    else:
        text = open(path, encoding="utf-8").read()
    items = json.loads(text)
    exemplars = tuple(
        FewShotExemplar(input_summary=i["input_summary"], output_prompt=i["output_prompt"])
        for i in items
    )
    if not MIN_EXEMPLARS <= len(exemplars) <= MAX_EXEMPLARS:
        raise ValueError(
            f"exemplar set must have {MIN_EXEMPLARS}..{MAX_EXEMPLARS} entries, got {len(exemplars)}"
        )
    return exemplars


def build_diary_prompt(
    events: Sequence[EventRecord],
    prefs: Preferences,
    style: StylePrompt,
    memory_lines: Sequence[str] = (),
) -> str:
    """Prompt for the diary-text model; see module docstring for contents.

    memory_lines optionally adds retrieved past-memory summaries as extra
    context (off by default at the engine level).
    """
    if not events:
        raise ValueError("diary prompt needs at least one event")
    event_lines = []
    for event in events:
        if event.emotions:
            note = "feeling: " + ", ".join(e.label for e in event.emotions)
        else:
            note = "keep the tone neutral"
        event_lines.append(f"- {quote_user_text(event.event_summary)} ({note})")

    memory_section = ""
    if memory_lines:
        joined = "\n".join(f"- {quote_user_text(line)}" for line in memory_lines)
        memory_section = f"\n\nPast memories for context:\n{joined}\n"

    hashtags = merge_hashtags(events)
    return _render(
        _template("diary_prompt.txt"),
        {
            "style_fragments": "\n".join(style.fragments),
            "word_limit": str(DIARY_WORD_LIMIT),
            "event_lines": "\n".join(event_lines),
            "memory_section": memory_section,
            "hashtags": " ".join(hashtags) if hashtags else "(none)",
        },
    )


def _character_clause(prefs: Preferences) -> str:
    parts = [prefs.age_band]
    for attribute, value in prefs.appearance:  # already sorted
        parts.append(f"{attribute.replace('_', ' ')}: {value}")
    return ", ".join(parts)


def _scene_clause(event: EventRecord, prefs: Preferences) -> str:
    items = list(event.places) + list(event.objects)
    if not items:
        return prefs.background_aesthetic
    return ", ".join(quote_user_text(item) for item in items)


def build_image_prompt(
    event: EventRecord,
    prefs: Preferences,
    exemplars: Sequence[FewShotExemplar],
) -> str:
    """Few-shot image prompt; every appearance value appears verbatim."""
    blocks = "\n".join(
        f"Input: {ex.input_summary}\nOutput: {ex.output_prompt}\n" for ex in exemplars
    )
    mood = event.top_emotion or NEUTRAL_MOOD
    input_block = (
        f"character: {_character_clause(prefs)}; "
        f"scene: {_scene_clause(event, prefs)}; "
        f"mood: {quote_user_text(mood)}; "
        f"style: {prefs.background_aesthetic}"
    )
    return _render(
        _template("image_prompt.txt"),
        {"exemplar_blocks": blocks, "input_block": input_block},
    )


def merge_hashtags(events: Sequence[EventRecord]) -> tuple[str, ...]:
    """Union of hashtags across events, first occurrence wins the order."""
    merged: list[str] = []
    for event in events:
        for tag in event.hashtags:
            if tag not in merged:
                merged.append(tag)
    return tuple(merged)


def compose_entry(
    diary_text: str,
    image_prompt: str,
    image_ref: str | None,
    events: Sequence[EventRecord],
    now: int,
    *,
    entry_id: str,
    user_id: str,
    source_event_ids: Sequence[str],
) -> DiaryEntry:
    """Assemble the final DiaryEntry from generated parts plus source events."""
    if not diary_text.strip():
        raise ValueError("diary_text must be non-empty")
    if not events:
        raise ValueError("compose_entry needs at least one source event")
    return DiaryEntry(
        id=entry_id,
        user_id=user_id,
        diary_text=diary_text,
        image_prompt=image_prompt,
        image_ref=image_ref,
        source_event_ids=tuple(source_event_ids),
        created_at=now,
        hashtags=merge_hashtags(events),
    )
