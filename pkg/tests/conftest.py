import pytest

from persode.analyzer import EmotionLexicon
from persode.engine import Engine, EngineConfig
from persode.providers import ProviderSet
from persode.sim import VirtualClock
from persode.store import JournalStore

# 2025-03-03T18:00:00Z; all virtual-clock tests start here
T0 = 1_741_024_800_000

FIXTURE_LEXICON_ENTRIES = {
    "upset": ("frustration", 0.7),
    "sad": ("sadness", 0.6),
    "happy": ("joy", 0.8),
    "angry": ("anger", 0.8),
    "scared": ("fear", 0.7),
    "annoyed": ("frustration", 0.5),
}

# Scripted session in the shape of the system's canonical walkthrough: a car
# splashes the user, ruining a favorite outfit; consecutive overlapping turns
# form a single event.
CAR_SPLASH_MESSAGES = [
    ("A car splashed water all over me on the way home today.", T0),
    ("The water ruined my favorite outfit and I was so upset.", T0 + 120_000),
    ("Now I have to wash that outfit again, I even cried, so sad.", T0 + 240_000),
]


@pytest.fixture
def fixture_lexicon():
    return EmotionLexicon(dict(FIXTURE_LEXICON_ENTRIES))


@pytest.fixture
def car_splash_script_dict():
    return {
        "preferences": {"traits": ["empathetic"], "appearance": {"hair_color": "yellow"}},
        "messages": [{"text": text, "at": at} for text, at in CAR_SPLASH_MESSAGES],
        "close_at": T0 + 300_000,
        "seed": 7,
    }


@pytest.fixture
def engine_factory(tmp_path, fixture_lexicon):
    """Engines with mock providers, a virtual clock, and the pinned lexicon."""

    def make(
        subdir="data",
        clock_start=T0,
        providers=None,
        params=None,
        config=None,
    ) -> tuple[Engine, VirtualClock]:
        clock = VirtualClock(clock_start)
        engine = Engine(
            store=JournalStore(tmp_path / subdir),
            providers=providers or ProviderSet.mocks(),
            params=params,
            lexicon=fixture_lexicon,
            clock=clock,
            config=config or EngineConfig(),
        )
        return engine, clock

    return make


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    results = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            if status != "passed" or report.when == "call":
                name = nodeid.split("::")[-1]
                results.append((name, "PASS" if status == "passed" else "FAIL"))
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in results:
            terminalreporter.write_line(f"[{outcome}] {name}")
