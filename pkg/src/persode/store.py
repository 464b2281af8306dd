"""Durable per-user persistence on append-only JSON-lines files.

Layout: <data_dir>/<user_id>/{profile,fragments,diaries}.jsonl, one JSON
object per line, each carrying schema_version. Every write rewrites the
file through a temp file + atomic rename with fsync, so a crash at any
point leaves the previous state intact. A truncated trailing line (teared
write from a foreign process) is skipped with a warning; loaders reject
schema versions newer than this build.

Fragments and profiles are versioned by appending superseding records; the
last record per id wins at load, which keeps recall-count history auditable.
One writer per user at a time; readers work on immutable snapshots.
"""

import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import NotFoundError, SchemaVersionError, StorageError, ValidationError
from .memory_core import MemoryFragment, MemoryTerm, ScoringParams, classify_term, memory_strength
from .persona import Preferences, validate_preferences
from .templater import DiaryEntry

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DATA_DIR_ENV = "PERSODE_DATA_DIR"
DEFAULT_DATA_DIR = "persode_data"

PROFILE_FILE = "profile.jsonl"
FRAGMENTS_FILE = "fragments.jsonl"
DIARIES_FILE = "diaries.jsonl"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR))


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    preferences: Preferences
    created_at: int  # ms

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "user_id": self.user_id,
            "preferences": self.preferences.to_dict(),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UserRecord":
        return cls(
            user_id=data["user_id"],
            preferences=validate_preferences(data["preferences"]),
            created_at=data["created_at"],
        )


@dataclass(frozen=True)
class DiaryPage:
    entries: tuple[DiaryEntry, ...]
    page: int
    page_size: int
    total: int
    snapshot: int  # pass back to keep pagination stable across inserts


class JournalStore:
    """File-backed store for profiles, fragments, and diary entries."""

    def __init__(self, data_dir: Path | str | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._locks_guard = threading.Lock()
        self._user_locks: dict[str, threading.Lock] = {}

    # -- low-level jsonl plumbing ------------------------------------------

    def _user_lock(self, user_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._user_locks.setdefault(user_id, threading.Lock())

    def _user_dir(self, user_id: str, create: bool = False) -> Path:
        path = self.data_dir / user_id
        if create:
            path.mkdir(parents=True, exist_ok=True)
        return path

    def _append_line(self, path: Path, record: dict) -> None:
        """Append one record via whole-file rewrite + atomic rename."""
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        if "\n" in line:
            raise StorageError("record serialization produced a newline")
        existing = path.read_bytes() if path.exists() else b""
        tmp = path.with_suffix(path.suffix + ".tmp")
        try:
            with open(tmp, "wb") as handle:
                handle.write(existing + line.encode("utf-8") + b"\n")
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"write to {path.name} failed: {exc}") from exc

    def _read_lines(self, path: Path) -> list[dict]:
        if not path.exists():
            return []
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise StorageError(f"read of {path.name} failed: {exc}") from exc
        records = []
        lines = data.split(b"\n")
        # data ending in \n yields a trailing empty chunk; anything else is a tear
        complete, tail = lines[:-1], lines[-1]
        if tail:
            log.warning("skipping truncated trailing line in %s", path)
        for index, raw in enumerate(complete):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                if index == len(complete) - 1:
                    log.warning("skipping corrupt final line in %s", path)
                    continue
                raise StorageError(f"corrupt line {index + 1} in {path.name}: {exc}") from exc
            version = record.get("schema_version")
            if version is None or version > SCHEMA_VERSION:
                raise SchemaVersionError(
                    f"{path.name} line {index + 1} has schema_version {version}; "
                    f"this build supports <= {SCHEMA_VERSION}"
                )
            records.append(record)
        return records

    def _require_user_dir(self, user_id: str) -> Path:
        path = self._user_dir(user_id)
        if not (path / PROFILE_FILE).exists():
            raise NotFoundError(f"unknown user: {user_id}")
        return path

    # -- profiles -----------------------------------------------------------

    def put_profile(self, user: UserRecord) -> None:
        """Upsert (append a superseding version); last write wins on read."""
        with self._user_lock(user.user_id):
            path = self._user_dir(user.user_id, create=True) / PROFILE_FILE
            self._append_line(path, user.to_dict())

    def get_profile(self, user_id: str) -> UserRecord:
        path = self._require_user_dir(user_id) / PROFILE_FILE
        records = self._read_lines(path)
        if not records:
            raise NotFoundError(f"unknown user: {user_id}")
        return UserRecord.from_dict(records[-1])

    def list_user_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.data_dir.iterdir() if (p / PROFILE_FILE).exists()
        )

    # -- fragments ----------------------------------------------------------

    def put_fragment(self, fragment: MemoryFragment) -> str:
        """Persist a fragment version durably; returns the stored id."""
        with self._user_lock(fragment.user_id):
            current = {f.id: f for f in self._load_fragments_unlocked(fragment.user_id)}
            previous = current.get(fragment.id)
            if previous is not None and fragment.recall_count < previous.recall_count:
                raise ValidationError(
                    f"recall_count for {fragment.id} may not decrease "
                    f"({previous.recall_count} -> {fragment.recall_count})",
                    field="recall_count",
                )
            path = self._user_dir(fragment.user_id, create=True) / FRAGMENTS_FILE
            self._append_line(path, {"schema_version": SCHEMA_VERSION, **fragment.to_dict()})
        return fragment.id

    def _load_fragments_unlocked(self, user_id: str) -> list[MemoryFragment]:
        path = self._user_dir(user_id) / FRAGMENTS_FILE
        latest: dict[str, MemoryFragment] = {}
        for record in self._read_lines(path):
            fragment = MemoryFragment.from_dict(record)
            latest[fragment.id] = fragment
        return sorted(latest.values(), key=lambda f: (f.created_at, f.id))

    def load_fragments(self, user_id: str) -> list[MemoryFragment]:
        """Latest version of every fragment, ordered by creation time."""
        self._require_user_dir(user_id)
        return self._load_fragments_unlocked(user_id)

    def get_fragments(
        self,
        user_id: str,
        *,
        now: int | None = None,
        params: ScoringParams | None = None,
        min_strength: float | None = None,
        term: MemoryTerm | None = None,
        since: int | None = None,
    ) -> list[MemoryFragment]:
        """Snapshot of fragments matching the filter, ordered by created_at.

        min_strength and term are evaluated at `now` with `params`; both must
        be supplied when either filter is used.
        """
        fragments = self.load_fragments(user_id)
        if (min_strength is not None or term is not None) and (now is None or params is None):
            raise ValidationError("min_strength/term filters require now and params")
        out = []
        for fragment in fragments:
            if since is not None and fragment.created_at < since:
                continue
            if min_strength is not None and memory_strength(fragment, params, now) < min_strength:
                continue
            if term is not None and classify_term(fragment, params, now) is not term:
                continue
            out.append(fragment)
        return out

    # -- diaries --------------------------------------------------------------

    def put_diary(self, entry: DiaryEntry) -> str:
        with self._user_lock(entry.user_id):
            path = self._user_dir(entry.user_id, create=True) / DIARIES_FILE
            self._append_line(path, entry.to_dict())
        return entry.id

    def list_diaries(
        self,
        user_id: str,
        page: int = 1,
        page_size: int = 10,
        snapshot: int | None = None,
    ) -> DiaryPage:
        """Newest-first pages. Reusing the returned snapshot token keeps
        previously served pages stable while new entries are appended."""
        if page_size < 1:
            raise ValidationError("page_size must be >= 1", field="page_size")
        if page < 1:
            raise ValidationError("page must be >= 1", field="page")
        self._require_user_dir(user_id)
        records = self._read_lines(self._user_dir(user_id) / DIARIES_FILE)
        if snapshot is None or snapshot > len(records):
            snapshot = len(records)
        visible = records[:snapshot]  # append-only: the first N never change
        newest_first = list(reversed(visible))
        start = (page - 1) * page_size
        entries = tuple(DiaryEntry.from_dict(r) for r in newest_first[start : start + page_size])
        return DiaryPage(
            entries=entries, page=page, page_size=page_size, total=snapshot, snapshot=snapshot
        )
