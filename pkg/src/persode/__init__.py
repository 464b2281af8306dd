"""Persode: an episodic-memory journaling engine.

Scores, decays, and retrieves conversational memories; extracts
event-emotion metadata from dialogue; and compiles it, together with
onboarding persona preferences, into diary entries and image prompts.
"""

__version__ = "0.1.0"

from .memory_core import (
    MemoryFragment,
    MemoryTerm,
    ScoringParams,
    classify_term,
    decay_factor,
    memory_strength,
    register_recall,
)

__all__ = [
    "MemoryFragment",
    "MemoryTerm",
    "ScoringParams",
    "classify_term",
    "decay_factor",
    "memory_strength",
    "register_recall",
    "__version__",
]
