"""Onboarding preferences and chatbot response styling.

Preferences capture the persona a user picks during onboarding: appearance
attributes for generated imagery, a background aesthetic, chatbot
personality traits, and an emotional expressiveness level. Valid values
live in a versioned catalog JSON file shared with the UI so pickers and
validation can never drift apart.

Traits compile into a deterministic StylePrompt: one directive sentence per
active trait (in fixed precedence order) plus one expressiveness directive.
"""

import importlib.resources
import json
from dataclasses import dataclass, field

from .errors import ValidationError

SCHEMA_VERSION = 1

# detailed and direct pull response style in opposite directions
EXCLUSIVE_TRAITS = ("detailed", "direct")

DEFAULT_AGE_BAND = "adult"
DEFAULT_BACKGROUND = "cozy-room"
DEFAULT_TRAITS = ("friendly",)
DEFAULT_EXPRESSIVENESS = 3

TRAIT_PRECEDENCE = ("empathetic", "friendly", "detailed", "direct", "humorous", "calm")

TRAIT_DIRECTIVES = {
    "empathetic": "Acknowledge the user's feelings first, and respond with warmth and validation.",
    "friendly": "Keep the tone warm, casual, and encouraging, like a close friend would.",
    "detailed": "Give thorough, specific responses that explore the user's experience in depth.",
    "direct": "Be concise and to the point; skip filler and hedging.",
    "humorous": "Weave in light, gentle humor when the moment allows it.",
    "calm": "Maintain a steady, soothing tone throughout the conversation.",
}

EXPRESSIVENESS_DIRECTIVES = {
    1: "Keep emotional language minimal and measured.",
    2: "Use a mostly neutral tone with occasional gentle warmth.",
    3: "Balance factual observations with moderate emotional reflection.",
    4: "Respond with clearly expressed feeling and emotional color.",
    5: "Mirror the user's emotions vividly and expressively.",
}


def load_catalogs() -> dict:
    """Catalog of allowed appearance values, backgrounds, traits, age bands."""
    text = importlib.resources.files("persode.data").joinpath("catalogs.json").read_text("utf-8")
    return json.loads(text)


_CATALOGS = load_catalogs()

_KNOWN_KEYS = {
    "schema_version",
    "user_id",
    "age_band",
    "appearance",
    "background_aesthetic",
    "traits",
    "emotional_expressiveness",
}


@dataclass(frozen=True)
class Preferences:
    user_id: str = ""
    age_band: str = DEFAULT_AGE_BAND
    appearance: tuple[tuple[str, str], ...] = ()  # sorted (attribute, value) pairs
    background_aesthetic: str = DEFAULT_BACKGROUND
    traits: tuple[str, ...] = DEFAULT_TRAITS  # in precedence order
    emotional_expressiveness: int = DEFAULT_EXPRESSIVENESS

    def appearance_map(self) -> dict:
        return dict(self.appearance)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "user_id": self.user_id,
            "age_band": self.age_band,
            "appearance": self.appearance_map(),
            "background_aesthetic": self.background_aesthetic,
            "traits": list(self.traits),
            "emotional_expressiveness": self.emotional_expressiveness,
        }


def validate_preferences(raw: dict) -> Preferences:
    """Validate an onboarding payload, filling defaults for absent fields.

    Raises ValidationError naming the offending field on any unknown trait,
    out-of-catalog value, or out-of-range expressiveness.
    """
    if not isinstance(raw, dict):
        raise ValidationError("preferences payload must be an object", field="preferences")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ValidationError(f"unknown field: {sorted(unknown)[0]}", field=sorted(unknown)[0])

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported preferences schema_version {version}", field="schema_version"
        )

    user_id = raw.get("user_id", "")
    if not isinstance(user_id, str):
        raise ValidationError("user_id must be a string", field="user_id")

    age_band = raw.get("age_band", DEFAULT_AGE_BAND)
    if age_band not in _CATALOGS["age_bands"]:
        raise ValidationError(f"unknown age_band: {age_band!r}", field="age_band")

    appearance_raw = raw.get("appearance", {})
    if not isinstance(appearance_raw, dict):
        raise ValidationError("appearance must be an object", field="appearance")
    appearance = []
    for attribute, value in appearance_raw.items():
        catalog = _CATALOGS["appearance"].get(attribute)
        if catalog is None:
            raise ValidationError(
                f"unknown appearance attribute: {attribute!r}", field="appearance"
            )
        if value not in catalog:
            raise ValidationError(
                f"value {value!r} not in the {attribute} catalog", field="appearance"
            )
        appearance.append((attribute, value))
    appearance.sort()

    background = raw.get("background_aesthetic", DEFAULT_BACKGROUND)
    if background not in _CATALOGS["backgrounds"]:
        raise ValidationError(
            f"unknown background_aesthetic: {background!r}", field="background_aesthetic"
        )

    traits_raw = raw.get("traits", list(DEFAULT_TRAITS))
    if not isinstance(traits_raw, (list, tuple)):
        raise ValidationError("traits must be a list", field="traits")
    for trait in traits_raw:
        if trait not in _CATALOGS["traits"]:
            raise ValidationError(f"unknown trait: {trait!r}", field="traits")
    trait_set = set(traits_raw)
    if all(t in trait_set for t in EXCLUSIVE_TRAITS):
        raise ValidationError(
            "traits 'detailed' and 'direct' are mutually exclusive", field="traits"
        )
    traits = tuple(t for t in TRAIT_PRECEDENCE if t in trait_set)

    expressiveness = raw.get("emotional_expressiveness", DEFAULT_EXPRESSIVENESS)
    if isinstance(expressiveness, bool) or not isinstance(expressiveness, int):
        raise ValidationError(
            "emotional_expressiveness must be an integer", field="emotional_expressiveness"
        )
    if not 1 <= expressiveness <= 5:
        raise ValidationError(
            "emotional_expressiveness must be between 1 and 5",
            field="emotional_expressiveness",
        )

    return Preferences(
        user_id=user_id,
        age_band=age_band,
        appearance=tuple(appearance),
        background_aesthetic=background,
        traits=traits,
        emotional_expressiveness=expressiveness,
    )


@dataclass(frozen=True)
class StylePrompt:
    fragments: tuple[str, ...]
    trait_order: tuple[str, ...]


def compose_style_prompt(prefs: Preferences) -> StylePrompt:
    """One directive per active trait, in precedence order, plus the
    expressiveness directive. Pure and byte-deterministic."""
    traits = tuple(t for t in TRAIT_PRECEDENCE if t in prefs.traits)
    fragments = [TRAIT_DIRECTIVES[t] for t in traits]
    fragments.append(EXPRESSIVENESS_DIRECTIVES[prefs.emotional_expressiveness])
    return StylePrompt(fragments=tuple(fragments), trait_order=traits)
