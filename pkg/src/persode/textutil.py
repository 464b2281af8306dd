"""Deterministic text helpers: tokenization, stopwords, hashtag shaping, FNV-1a.

Everything here must behave identically across platforms and runs; no locale
or hash-seed dependence.
"""

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_HASHTAG_RE = re.compile(r"^#[A-Za-z0-9]+$")
_SPLIT_RE = re.compile(r"[^A-Za-z0-9]+")

# Compact English stopword list; enough to keep hashtags and topic-shift
# detection focused on content words.
STOPWORDS = frozenset(
    """
    a about after again all also am an and any are as at be because been
    before being but by can cant could couldnt did didnt do does doesnt
    doing dont down for from get got had has have having he her here him
    his how i id if ill im in into is isnt it its ive just like me more
    most my no not now of off on once only or other our out over really
    she should so some such than that the their them then there these
    they this those through to today too under until up us very was wasnt
    we were what when where which while who why will with wont would you
    your
    """.split()
)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """Standard 64-bit FNV-1a hash; stable across platforms and languages."""
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens, in order of appearance."""
    return _TOKEN_RE.findall(text.lower())


def content_words(text: str) -> list[str]:
    """Tokens minus stopwords; duplicates preserved."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


def camel(token: str) -> str:
    """Uppercase the first character, leave the rest untouched."""
    return token[:1].upper() + token[1:]


def normalize_hashtag(raw: str) -> str | None:
    """Normalize arbitrary tag text into '#CamelCase' form.

    Splits on non-alphanumeric runs, capitalizes each piece, joins.
    Returns None when nothing alphanumeric survives.
    """
    parts = [p for p in _SPLIT_RE.split(raw.lstrip("#")) if p]
    if not parts:
        return None
    tag = "#" + "".join(camel(p) for p in parts)
    return tag if _HASHTAG_RE.match(tag) else None


def is_valid_hashtag(tag: str) -> bool:
    return bool(_HASHTAG_RE.match(tag))


def first_sentence(text: str, max_chars: int = 140) -> str:
    """First sentence of text, whitespace-collapsed, truncated at a word edge."""
    collapsed = " ".join(text.split())
    match = re.search(r"[.!?]", collapsed)
    sentence = collapsed[: match.end()] if match else collapsed
    if len(sentence) <= max_chars:
        return sentence
    cut = sentence[:max_chars].rsplit(" ", 1)[0]
    return cut + "..."
