"""Scripted session simulation with a virtual clock.

A session script lists timestamped user messages plus optional persona
preferences and assertions. `run_script` replays it against an engine under
a virtual clock, closes the session, and returns a JSON-serializable report
of turns, retrievals, the diary, and virtual timings. With mock providers
the report is byte-reproducible for a fixed script and seed.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .engine import Engine, EngineConfig
from .errors import ValidationError
from .memory_core import ScoringParams
from .providers import ProviderSet
from .store import JournalStore
from .timeutil import parse_timestamp

REPORT_SCHEMA_VERSION = 1


class VirtualClock:
    """Settable clock; the script drives it forward."""

    def __init__(self, start_ms: int = 0):
        self.current_ms = start_ms

    def set(self, value_ms: int) -> None:
        self.current_ms = value_ms

    def __call__(self) -> int:
        return self.current_ms


@dataclass(frozen=True)
class ScriptAssertion:
    kind: str  # reply_contains | diary_hashtags_include | min_new_fragments
    value: object
    turn: int | None = None


@dataclass(frozen=True)
class SessionScript:
    messages: tuple[tuple[str, int], ...]  # (text, at_ms), strictly increasing
    preferences: dict = field(default_factory=dict)
    user_id: str | None = None
    close_at: int | None = None
    seed: int = 0
    assertions: tuple[ScriptAssertion, ...] = ()

    def __post_init__(self):
        if not self.messages:
            raise ValidationError("script needs at least one message", field="messages")
        for text, _at in self.messages:
            if not text.strip():
                raise ValidationError("script message text must be non-empty", field="messages")
        stamps = [at for _t, at in self.messages]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValidationError(
                "script timestamps must be strictly increasing", field="messages"
            )
        if self.close_at is not None and self.close_at < stamps[-1]:
            raise ValidationError("close_at precedes the last message", field="close_at")


def load_script(path: Path | str) -> SessionScript:
    data = json.loads(Path(path).read_text("utf-8"))
    return script_from_dict(data)


def script_from_dict(data: dict) -> SessionScript:
    try:
        messages = tuple(
            (m["text"], parse_timestamp(m["at"])) for m in data["messages"]
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed script messages: {exc}", field="messages")
    assertions = []
    for item in data.get("assertions", []):
        assertions.append(
            ScriptAssertion(
                kind=item["kind"], value=item.get("value"), turn=item.get("turn")
            )
        )
    close_at = data.get("close_at")
    return SessionScript(
        messages=messages,
        preferences=data.get("preferences", {}),
        user_id=data.get("user_id"),
        close_at=parse_timestamp(close_at) if close_at is not None else None,
        seed=data.get("seed", 0),
        assertions=tuple(assertions),
    )


def _check_assertions(script: SessionScript, report: dict) -> list[dict]:
    results = []
    for assertion in script.assertions:
        if assertion.kind == "reply_contains":
            turn = assertion.turn or 0
            ok = (
                0 <= turn < len(report["turns"])
                and str(assertion.value) in report["turns"][turn]["reply"]
            )
        elif assertion.kind == "diary_hashtags_include":
            wanted = assertion.value if isinstance(assertion.value, list) else [assertion.value]
            ok = set(wanted) <= set(report["diary"]["hashtags"])
        elif assertion.kind == "min_new_fragments":
            ok = len(report["new_fragment_ids"]) >= int(assertion.value)
        else:
            raise ValidationError(f"unknown assertion kind: {assertion.kind}", field="assertions")
        results.append({"kind": assertion.kind, "ok": ok})
    return results


def run_script(
    script: SessionScript,
    data_dir: Path | str,
    params: ScoringParams | None = None,
    providers: ProviderSet | None = None,
    config: EngineConfig | None = None,
    lexicon=None,
) -> dict:
    """Replay the script against a fresh engine over `data_dir`."""
    clock = VirtualClock(script.messages[0][1])
    engine = Engine(
        store=JournalStore(data_dir),
        providers=providers or ProviderSet.mocks(),
        params=params,
        lexicon=lexicon,
        clock=clock,
        config=config,
    )

    if script.user_id is not None:
        try:
            engine.store.get_profile(script.user_id)
            user_id = script.user_id
        except Exception:
            payload = dict(script.preferences)
            payload["user_id"] = script.user_id
            user_id = engine.create_user(payload).user_id
    else:
        user_id = engine.create_user(script.preferences or None).user_id

    session = engine.open_session(user_id)
    turns = []
    virtual_start = script.messages[0][1]
    for text, at in script.messages:
        clock.set(at)
        result = engine.post_message(session.session_id, text)
        turns.append(
            {
                "at": at,
                "text": text,
                "reply": result.reply,
                "cited_memory_ids": list(result.cited_memory_ids),
                "ranked": [c.to_dict() for c in result.ranked],
            }
        )

    close_at = script.close_at if script.close_at is not None else script.messages[-1][1]
    clock.set(close_at)
    closed = engine.close_session(session.session_id)

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "seed": script.seed,
        "user_id": user_id,
        "session_id": session.session_id,
        "turns": turns,
        "diary": closed.entry.to_dict(),
        "new_fragment_ids": list(closed.new_fragment_ids),
        "warnings": list(closed.warnings),
        "timings": {
            "turn_virtual_ms": [at - virtual_start for _t, at in script.messages],
            "total_virtual_ms": close_at - virtual_start,
        },
    }
    report["assertions"] = _check_assertions(script, report)
    return report


def report_to_json(report: dict) -> str:
    """Canonical serialization: stable for byte-equality comparisons."""
    return json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"
