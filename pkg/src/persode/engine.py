"""Session orchestration: the conversation -> memory -> diary pipeline.

Every user message is appended to the session buffer, recent context is
embedded and matched against the user's stored memories, the chat provider
replies with those memories woven in, and each cited memory gets a recall
registered. Closing a session segments the buffer into events, persists
them as scored memory fragments, and composes the illustrated diary entry.

The clock, providers, and store are all injected; with mock providers and a
virtual clock the whole pipeline is byte-deterministic.
"""

import logging
from dataclasses import dataclass, field, replace

from .analyzer import (
    USER,
    AGENT,
    DialogueBuffer,
    EmotionLexicon,
    EventRecord,
    Turn,
    extract_metadata,
    load_lexicon,
    segment_events,
)
from .errors import (
    ConflictError,
    InvalidStateError,
    NotFoundError,
    PolicyError,
    ProtocolError,
    ProviderUnavailable,
    ValidationError,
)
from .memory_core import (
    MemoryFragment,
    MemoryTerm,
    ScoringParams,
    classify_term,
    memory_strength,
    register_recall,
)
from .persona import Preferences, compose_style_prompt, validate_preferences
from .providers import (
    ChatRequest,
    ProviderSet,
    chat_complete,
    extraction_backend_adapter,
    generate_image,
)
from .retrieval import (
    Embedder,
    HashedBagEmbedder,
    RankedMemory,
    RetrievalQuery,
    embed_text,
    select_memories,
)
from .store import JournalStore, UserRecord
from .templater import (
    DiaryEntry,
    build_diary_prompt,
    build_image_prompt,
    compose_entry,
    load_exemplars,
)
from .timeutil import Clock, days_between, now_ms

log = logging.getLogger(__name__)

OPEN = "open"
CLOSED = "closed"


@dataclass
class Session:
    session_id: str
    user_id: str
    opened_at: int
    state: str = OPEN
    turns: list[Turn] = field(default_factory=list)

    def buffer(self) -> DialogueBuffer:
        return DialogueBuffer(session_id=self.session_id, turns=tuple(self.turns))


@dataclass(frozen=True)
class CitedMemory:
    """A ranked memory plus the display fields the chat UI needs."""

    ranked: RankedMemory
    event_summary: str
    top_emotion: str | None
    age_days: float

    def to_dict(self) -> dict:
        return {
            "fragment_id": self.ranked.fragment_id,
            "similarity": self.ranked.similarity,
            "strength": self.ranked.strength,
            "combined": self.ranked.combined,
            "term": self.ranked.term.value,
            "event_summary": self.event_summary,
            "top_emotion": self.top_emotion,
            "age_days": self.age_days,
        }


@dataclass(frozen=True)
class MessageResult:
    reply: str
    cited_memory_ids: tuple[str, ...]
    ranked: tuple[CitedMemory, ...]


@dataclass(frozen=True)
class CloseResult:
    entry: DiaryEntry
    new_fragment_ids: tuple[str, ...]
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class EngineConfig:
    retrieval_k: int = 3
    context_turns: int = 3  # user turns concatenated into the retrieval query
    image_enabled: bool = True
    include_memories_in_diary: bool = False


class Engine:
    """Binds store, analyzer, retrieval, persona, templater, and providers."""

    def __init__(
        self,
        store: JournalStore,
        providers: ProviderSet,
        params: ScoringParams | None = None,
        embedder: Embedder | None = None,
        lexicon: EmotionLexicon | None = None,
        clock: Clock = now_ms,
        config: EngineConfig | None = None,
    ):
        self.store = store
        self.providers = providers
        self.params = params or ScoringParams()
        self.embedder = embedder or HashedBagEmbedder()
        self.lexicon = lexicon or load_lexicon()
        self.clock = clock
        self.config = config or EngineConfig()
        self.exemplars = load_exemplars()
        self.sessions: dict[str, Session] = {}
        self._session_seq = 0

    # -- users ----------------------------------------------------------------

    def create_user(self, preferences_payload: dict | None = None) -> UserRecord:
        prefs = validate_preferences(preferences_payload or {})
        user_id = prefs.user_id or self._next_user_id()
        prefs = replace(prefs, user_id=user_id)
        record = UserRecord(user_id=user_id, preferences=prefs, created_at=self.clock())
        self.store.put_profile(record)
        return record

    def _next_user_id(self) -> str:
        return f"u{len(self.store.list_user_ids()) + 1:04d}"

    def get_preferences(self, user_id: str) -> Preferences:
        return self.store.get_profile(user_id).preferences

    def update_preferences(self, user_id: str, payload: dict) -> Preferences:
        existing = self.store.get_profile(user_id)
        prefs = replace(validate_preferences(payload), user_id=user_id)
        self.store.put_profile(replace(existing, preferences=prefs))
        return prefs

    # -- sessions ---------------------------------------------------------------

    def open_session(self, user_id: str) -> Session:
        self.store.get_profile(user_id)  # raises NotFoundError for unknown users
        self._session_seq += 1
        session = Session(
            session_id=f"s{self._session_seq:04d}",
            user_id=user_id,
            opened_at=self.clock(),
        )
        self.sessions[session.session_id] = session
        return session

    def _session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session: {session_id}")
        return session

    def _open_session(self, session_id: str) -> Session:
        session = self._session(session_id)
        if session.state != OPEN:
            raise ConflictError(f"session {session_id} is closed")
        return session

    # -- conversation -------------------------------------------------------------

    def post_message(self, session_id: str, text: str, now: int | None = None) -> MessageResult:
        """Record a user turn, retrieve memories, reply with them woven in.

        On provider failure the user turn stays recorded but no recalls are
        registered. Recalls are registered (and persisted) only for the
        memories actually cited in a successful reply.
        """
        session = self._open_session(session_id)
        if not text.strip():
            raise ValidationError("message text must be non-empty", field="text")
        now = self.clock() if now is None else now
        session.turns.append(Turn(speaker=USER, text=text, at=now))

        prefs = self.get_preferences(session.user_id)
        corpus = [
            f for f in self.store.load_fragments(session.user_id) if f.embedding is not None
        ]
        user_texts = [t.text for t in session.turns if t.speaker == USER]
        query = RetrievalQuery(
            user_id=session.user_id,
            context_text="\n".join(user_texts[-self.config.context_turns :]),
            k=self.config.retrieval_k,
            now=now,
        )
        ranked = select_memories(query, corpus, self.params, self.embedder)
        by_id = {f.id: f for f in corpus}
        cited = tuple(
            CitedMemory(
                ranked=r,
                event_summary=by_id[r.fragment_id].event_summary,
                top_emotion=by_id[r.fragment_id].top_emotion,
                age_days=days_between(by_id[r.fragment_id].created_at, now),
            )
            for r in ranked
        )

        style = compose_style_prompt(prefs)
        request = ChatRequest(
            user_message=text,
            style_fragments=style.fragments,
            retrieved_memories=tuple(
                (c.event_summary, c.top_emotion, c.age_days) for c in cited
            ),
            dialogue_window=tuple((t.speaker, t.text) for t in session.turns[-6:]),
        )
        reply = chat_complete(
            request, self.providers.chat_cfg, self.providers.chat, self.providers.sleep
        )

        for r in ranked:
            self.store.put_fragment(register_recall(by_id[r.fragment_id], now))
        session.turns.append(Turn(speaker=AGENT, text=reply, at=now))
        return MessageResult(
            reply=reply,
            cited_memory_ids=tuple(r.fragment_id for r in ranked),
            ranked=cited,
        )

    # -- diary composition ---------------------------------------------------------

    def _extraction_backend(self):
        if self.providers.extractor is None:
            return None
        return extraction_backend_adapter(
            self.providers.chat_cfg, self.providers.extractor, self.providers.sleep
        )

    def _fragment_from_event(self, user_id: str, fragment_id: str, event: EventRecord) -> MemoryFragment:
        embed_source = " ".join(
            [event.event_summary]
            + list(event.people)
            + list(event.objects)
            + list(event.places)
            + [tag[1:] for tag in event.hashtags]
        )
        return MemoryFragment(
            id=fragment_id,
            user_id=user_id,
            event_summary=event.event_summary,
            emotions=event.emotions,
            recall_count=0,
            last_recalled_at=None,
            relevance=event.salience,
            created_at=event.occurred_at,
            hashtags=event.hashtags,
            people=event.people,
            objects=event.objects,
            places=event.places,
            embedding=embed_text(embed_source, self.embedder),
        )

    def close_session(self, session_id: str, now: int | None = None) -> CloseResult:
        """Segment the session, persist scored fragments, compose the diary."""
        session = self._open_session(session_id)
        buffer = session.buffer()
        if not buffer.user_turn_indices():
            raise InvalidStateError("session has no user turns to journal")
        now = self.clock() if now is None else now
        warnings: list[str] = []

        backend = self._extraction_backend()
        segments = segment_events(buffer)
        events = [
            extract_metadata(buffer, segment, backend=backend, lexicon=self.lexicon)
            for segment in segments
        ]

        existing = len(self.store.get_fragments(session.user_id))
        fragment_ids = [f"f{existing + i + 1:04d}" for i in range(len(events))]
        for fragment_id, event in zip(fragment_ids, events):
            self.store.put_fragment(
                self._fragment_from_event(session.user_id, fragment_id, event)
            )

        prefs = self.get_preferences(session.user_id)
        style = compose_style_prompt(prefs)
        memory_lines: tuple[str, ...] = ()
        if self.config.include_memories_in_diary:
            memory_lines = tuple(
                summary for summary, _e, _a in self._diary_context_memories(session, now)
            )
        diary_prompt = build_diary_prompt(events, prefs, style, memory_lines=memory_lines)
        diary_request = ChatRequest(
            user_message=diary_prompt,
            style_fragments=style.fragments,
            retrieved_memories=tuple(
                (e.event_summary, e.top_emotion, days_between(e.occurred_at, now))
                for e in events
            ),
        )
        diary_text = chat_complete(
            diary_request, self.providers.chat_cfg, self.providers.chat, self.providers.sleep
        )

        top_event = min(enumerate(events), key=lambda pair: (-pair[1].salience, pair[0]))[1]
        image_prompt = build_image_prompt(top_event, prefs, self.exemplars)
        image_ref = None
        if self.config.image_enabled:
            try:
                image_ref = generate_image(
                    image_prompt,
                    self.providers.image_cfg,
                    self.providers.image,
                    self.providers.sleep,
                )
            except (ProviderUnavailable, PolicyError, ProtocolError) as exc:
                warnings.append(f"image generation failed: {exc}")
                log.warning("diary image generation failed: %s", exc)

        diaries = self.store.list_diaries(session.user_id, page=1, page_size=1)
        entry = compose_entry(
            diary_text,
            image_prompt,
            image_ref,
            events,
            now,
            entry_id=f"d{diaries.total + 1:04d}",
            user_id=session.user_id,
            source_event_ids=tuple(fragment_ids),
        )
        self.store.put_diary(entry)
        session.state = CLOSED
        return CloseResult(
            entry=entry, new_fragment_ids=tuple(fragment_ids), warnings=tuple(warnings)
        )

    def _diary_context_memories(self, session: Session, now: int):
        corpus = [
            f for f in self.store.load_fragments(session.user_id) if f.embedding is not None
        ]
        user_texts = [t.text for t in session.turns if t.speaker == USER]
        if not corpus or not user_texts:
            return []
        query = RetrievalQuery(
            user_id=session.user_id,
            context_text="\n".join(user_texts[-self.config.context_turns :]),
            k=self.config.retrieval_k,
            now=now,
        )
        by_id = {f.id: f for f in corpus}
        return [
            (by_id[r.fragment_id].event_summary, by_id[r.fragment_id].top_emotion,
             days_between(by_id[r.fragment_id].created_at, now))
            for r in select_memories(query, corpus, self.params, self.embedder)
        ]

    # -- memory views -----------------------------------------------------------------

    def memory_views(
        self, user_id: str, min_strength: float | None = None, term: str | None = None
    ) -> list[dict]:
        """Fragment dicts with live strength/term, for the memories endpoint."""
        now = self.clock()
        term_value = None
        if term is not None:
            try:
                term_value = MemoryTerm(term)
            except ValueError:
                raise ValidationError(f"unknown term filter: {term!r}", field="term")
        fragments = self.store.get_fragments(
            user_id,
            now=now,
            params=self.params,
            min_strength=min_strength,
            term=term_value,
        )
        views = []
        for fragment in fragments:
            data = fragment.to_dict()
            data.pop("embedding")
            data["emotional_intensity"] = fragment.emotional_intensity
            data["strength"] = memory_strength(fragment, self.params, now)
            data["term"] = classify_term(fragment, self.params, now).value
            views.append(data)
        return views
