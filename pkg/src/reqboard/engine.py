"""Orchestration core: wires templates, screening, lifecycle, threads, and
incentives over the persistence seam.

Mutations are optimistic: read fresh state, build one atomic batch, apply
with compare-and-set, retry on contention. Topic creation additionally
serializes through a single lock so the duplicate screen and the index
insert act as one step — a topic is never persisted that would have failed
its own screening.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
import uuid
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import model
from .config import Config
from .dedup import JaccardScorer, NgramIndex, ScreenResult
from .errors import ForumError, forbidden, not_found
from .model import (
    LifecycleEvent,
    RelationKind,
    ReqRelation,
    Role,
    Topic,
    TopicKind,
    TopicState,
    TransitionRecord,
)
from .stakeholders import (
    RIGHT_ACCEPT_ANSWER,
    RIGHT_ADD_POST,
    RIGHT_AWARD_SCORE,
    RIGHT_CREATE_QUESTIONNAIRE_TOPIC,
    RIGHT_CREATE_REWARD_TOPIC,
    RIGHT_CREATE_TOPIC,
    RIGHT_DEFINE_QUESTIONNAIRE,
    RIGHT_DEFINE_TEMPLATE,
    RIGHT_EXPORT,
    RIGHT_LINK_REQUIREMENTS,
    RIGHT_NEGOTIATION_INVITABLE,
    RIGHT_OPEN_POLL,
    RIGHT_OPEN_SESSION,
    RIGHT_REDEEM,
    RIGHT_RESPOND,
    RIGHT_SEND_MESSAGE,
    RIGHT_TAKE_TEST,
    RIGHT_VOTE,
    Capability,
    CapabilityTest,
    ExamQuestion,
    Gift,
    LedgerEntry,
    Stakeholder,
    TestResult,
    apply_capability,
    build_capability_test,
    grade_test,
    require_right,
    rights_for,
)
from .store import MemoryStore, PutOp
from .templates import (
    ItemRelation,
    Template,
    TemplateItem,
    build_template,
    default_templates,
    iter_item_values,
    render_guidance,
    validate_submission,
)
from .threads import (
    ChatMessage,
    NegotiationSession,
    Poll,
    PollKind,
    PollState,
    Post,
    Question,
    QuestionKind,
    Questionnaire,
    SessionOutcome,
    SessionState,
    append_message,
    cast_ballot,
    check_answers,
    merged_append,
    messages_after,
    poll_options,
    summarize,
    tally,
)

SYSTEM_USER_ID = "usr-system"

_PBKDF2_ITERATIONS = 50_000
_RETRY_ATTEMPTS = 10

# Which lifecycle event a finished negotiation fires.
OUTCOME_EVENTS = {
    SessionOutcome.CONSISTENT: LifecycleEvent.LOCK_CONSISTENT,
    SessionOutcome.INCONSISTENT_CANCEL: LifecycleEvent.CANCEL_FROM_NEGOTIATION,
    SessionOutcome.INCONSISTENT_REOPEN: LifecycleEvent.REOPEN_SUGGESTIONS,
}


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


def hash_secret(secret: str, salt: str | None = None) -> str:
    salt = salt or secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac(
        "sha256", secret.encode("utf-8"), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    ).hex()
    return f"{salt}${digest}"


def verify_secret(secret: str, stored: str) -> bool:
    salt, _, digest = stored.partition("$")
    candidate = hashlib.pbkdf2_hmac(
        "sha256", secret.encode("utf-8"), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    ).hex()
    return hmac.compare_digest(candidate, digest)


@dataclass(frozen=True)
class AuthSession:
    token: str
    stakeholder_id: str
    issued_at: float
    expires_at: float

    def to_doc(self) -> dict[str, Any]:
        return {
            "token": self.token,
            "stakeholder_id": self.stakeholder_id,
            "issued_at": self.issued_at,
            "expires_at": self.expires_at,
        }


class ForumEngine:
    """All forum operations behind one object; the HTTP layer stays thin."""

    def __init__(
        self,
        store: MemoryStore,
        config: Config | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.config = config or Config()
        self.config.validate()
        self.store = store
        self._clock = clock
        self._create_lock = threading.Lock()
        self._auth_lock = threading.Lock()
        self._sessions: dict[str, AuthSession] = {}
        self.index = NgramIndex(JaccardScorer(self.config.ngram_size))
        self._bootstrap()
        self._load_index()

    # -- bootstrap ---------------------------------------------------------

    def _bootstrap(self) -> None:
        ops: list[PutOp] = []
        if self.store.get("ledger", "main") is None:
            ops.append(PutOp("ledger", "main", {"entries": []}))
        if self.store.get("stakeholders", SYSTEM_USER_ID) is None:
            system = Stakeholder(
                id=SYSTEM_USER_ID,
                name="system",
                role=Role.MANAGEMENT,
                rights=rights_for(Role.MANAGEMENT, Capability.UNRATED),
                secret_hash=None,
            )
            ops.append(PutOp("stakeholders", SYSTEM_USER_ID, system.to_doc()))
            ops.append(PutOp("handles", "system", {"id": SYSTEM_USER_ID}))
            ops.append(PutOp("inboxes", SYSTEM_USER_ID, {"messages": []}))
        for template in default_templates():
            if self.store.get("templates", template.id) is None:
                ops.append(PutOp("templates", template.id, template.to_doc()))
        if ops:
            self.store.apply(ops)

    def _load_index(self) -> None:
        templates = {tid: Template.from_doc(rec.value) for tid, rec in self.store.scan("templates").items()}
        entries = []
        for tid, rec in self.store.scan("topics").items():
            topic = Topic.from_doc(rec.value)
            entries.append((tid, self._topic_text(templates[topic.template_id], topic.fields)))
        self.index.rebuild(entries)

    @staticmethod
    def _topic_text(template: Template, fields: Mapping[str, str]) -> str:
        # Item order comes from the template, so equal submissions always
        # produce equal screening text regardless of dict entry order.
        return " ".join(iter_item_values(template, fields))

    def _retrying(self, attempt: Callable[[], Any]) -> Any:
        for _ in range(_RETRY_ATTEMPTS):
            try:
                return attempt()
            except ForumError as err:
                if err.code != "STALE_VERSION":
                    raise
        raise ForumError("STALE_VERSION", "write contention persisted; retry the request")

    # -- stakeholders and auth ---------------------------------------------

    def register_stakeholder(
        self,
        handle: str,
        secret: str,
        role: Role,
        *,
        score: int = 0,
        reputation: int = 0,
        capability: Capability = Capability.UNRATED,
    ) -> Stakeholder:
        if not handle.strip():
            raise ForumError("MALFORMED_FIXTURE", "stakeholder handle must be non-empty")
        if self.store.get("handles", handle) is not None:
            raise ForumError("HANDLE_TAKEN", f"handle {handle!r} is already registered")
        now = self._clock()
        user = Stakeholder(
            id=new_id("usr"),
            name=handle,
            role=role,
            rights=rights_for(role, capability),
            reputation=reputation,
            capability=capability,
            score=score,
            secret_hash=hash_secret(secret),
        )
        ops: list[PutOp] = [
            PutOp("stakeholders", user.id, user.to_doc()),
            PutOp("handles", handle, {"id": user.id}),
            PutOp("inboxes", user.id, {"messages": []}),
        ]
        if score:
            ops.append(self._ledger_append_op([LedgerEntry("system", user.id, score, "seed", now)]))
        try:
            self.store.apply(ops)
        except ForumError as err:
            if err.code == "STALE_VERSION":
                raise ForumError("HANDLE_TAKEN", f"handle {handle!r} is already registered")
            raise
        return user

    def authenticate(self, handle: str, secret: str) -> AuthSession:
        mapping = self.store.get("handles", handle)
        user = None if mapping is None else self.get_stakeholder(mapping.value["id"])
        if user is None or user.secret_hash is None or not verify_secret(secret, user.secret_hash):
            raise ForumError("BAD_CREDENTIALS", "unknown handle or wrong secret")
        now = self._clock()
        session = AuthSession(
            token=secrets.token_urlsafe(32),
            stakeholder_id=user.id,
            issued_at=now,
            expires_at=now + self.config.session_ttl_seconds,
        )
        with self._auth_lock:
            self._sessions[session.token] = session
        return session

    def session_user(self, token: str | None) -> Stakeholder:
        now = self._clock()
        with self._auth_lock:
            session = self._sessions.get(token or "")
            if session is not None and session.expires_at <= now:
                del self._sessions[token or ""]
                session = None
        if session is None:
            raise ForumError("UNAUTHENTICATED", "missing, unknown, or expired session token")
        return self.get_stakeholder(session.stakeholder_id)

    def get_stakeholder(self, user_id: str) -> Stakeholder:
        rec = self.store.get("stakeholders", user_id)
        if rec is None:
            raise not_found("stakeholder", user_id)
        return Stakeholder.from_doc(rec.value)

    def system_actor(self) -> Stakeholder:
        return self.get_stakeholder(SYSTEM_USER_ID)

    # -- templates -----------------------------------------------------------

    def define_template(
        self,
        actor: Stakeholder,
        name: str,
        topic_kind: TopicKind,
        items: Sequence[TemplateItem],
        relations: Sequence[ItemRelation] = (),
    ) -> Template:
        require_right(actor, RIGHT_DEFINE_TEMPLATE)
        template = build_template(new_id("tpl"), name, topic_kind, items, relations)
        self.store.apply([PutOp("templates", template.id, template.to_doc())])
        return template

    def get_template(self, template_id: str) -> Template:
        rec = self.store.get("templates", template_id)
        if rec is None:
            raise not_found("template", template_id)
        return Template.from_doc(rec.value)

    def list_templates(self) -> list[Template]:
        return sorted(
            (Template.from_doc(rec.value) for rec in self.store.scan("templates").values()),
            key=lambda t: t.id,
        )

    def template_guidance(self, template_id: str) -> dict[str, Any]:
        return render_guidance(self.get_template(template_id))

    # -- topic creation pipeline ---------------------------------------------

    def create_topic(
        self,
        actor: Stakeholder,
        kind: TopicKind,
        template_id: str,
        fields: Mapping[str, str],
        *,
        bypass_dedup: bool = False,
    ) -> Topic:
        """Validate, screen, then persist a topic in NEW — in that order.

        Nothing is stored when validation or screening rejects. With
        auto_open configured, the open event fires in the same atomic step.
        """
        require_right(actor, RIGHT_CREATE_TOPIC)
        if kind is TopicKind.QUESTIONNAIRE:
            require_right(actor, RIGHT_CREATE_QUESTIONNAIRE_TOPIC)
        elif kind is TopicKind.REWARD:
            require_right(actor, RIGHT_CREATE_REWARD_TOPIC)
        template = self.get_template(template_id)
        if template.topic_kind is not kind:
            raise ForumError(
                "TEMPLATE_KIND_MISMATCH",
                f"template {template_id!r} builds {template.topic_kind.value} topics, not {kind.value}",
            )
        violations = validate_submission(fields, template)
        if violations:
            raise ForumError(
                "TEMPLATE_VIOLATIONS",
                f"submission violates the {template.name!r} template",
                {"violations": [v.to_doc() for v in violations]},
            )
        text = self._topic_text(template, fields)
        may_bypass = bypass_dedup and actor.role is Role.MANAGEMENT
        with self._create_lock:
            screen = self.index.screen(text, self.config.dedup_threshold)
            if screen.rejected and not may_bypass:
                raise ForumError(
                    "DUPLICATE",
                    "content is too similar to an existing topic",
                    screen.to_doc(),
                )
            now = self._clock()
            topic = Topic(
                id=new_id("top"),
                kind=kind,
                template_id=template_id,
                fields=dict(fields),
                author=actor.id,
                state=TopicState.NEW,
                version=1,
                created_at=now,
                updated_at=now,
            )
            records = [model.creation_record(topic.id, actor.id, now)]
            if self.config.auto_open:
                topic, opened = model.apply_event(
                    topic,
                    LifecycleEvent.OPEN_FOR_SUGGESTIONS,
                    SYSTEM_USER_ID,
                    Role.MANAGEMENT,
                    at=now,
                    sequence=2,
                )
                records.append(opened)
            self.store.apply(
                [
                    PutOp("topics", topic.id, topic.to_doc()),
                    PutOp("transitions", topic.id, {"records": [r.to_doc() for r in records]}),
                    PutOp("threads", topic.id, {"posts": []}),
                ]
            )
            self.index.insert(topic.id, text)
        return topic

    def screen_preview(self, template_id: str, fields: Mapping[str, str]) -> ScreenResult:
        """Run the duplicate gate without persisting anything."""
        template = self.get_template(template_id)
        return self.index.screen(
            self._topic_text(template, fields), self.config.dedup_threshold
        )

    def get_topic(self, topic_id: str) -> Topic:
        rec = self.store.get("topics", topic_id)
        if rec is None:
            raise not_found("topic", topic_id)
        return Topic.from_doc(rec.value)

    def list_topics(
        self,
        states: Iterable[TopicState] | None = None,
        cursor: str | None = None,
        limit: int = 50,
    ) -> tuple[list[Topic], str | None]:
        limit = max(1, min(int(limit), 200))
        everything = sorted(
            (Topic.from_doc(rec.value) for rec in self.store.scan("topics").values()),
            key=lambda t: (t.created_at, t.id),
        )
        wanted = set(states) if states else None
        matching = [t for t in everything if wanted is None or t.state in wanted]
        if cursor is not None:
            anchor = next((t for t in everything if t.id == cursor), None)
            if anchor is None:
                raise ForumError("BAD_CURSOR", f"unknown cursor {cursor!r}")
            key = (anchor.created_at, anchor.id)
            matching = [t for t in matching if (t.created_at, t.id) > key]
        page = matching[:limit]
        next_cursor = page[-1].id if len(matching) > limit else None
        return page, next_cursor

    # -- lifecycle -------------------------------------------------------------

    def apply_event(
        self,
        actor: Stakeholder,
        topic_id: str,
        event: LifecycleEvent,
        *,
        expected_version: int | None = None,
        duplicate_of: str | None = None,
    ) -> Topic:
        """Drive one lifecycle edge; optionally guard on the caller's snapshot
        version (STALE_VERSION on mismatch, caller refreshes and retries)."""
        for _ in range(_RETRY_ATTEMPTS):
            rec = self.store.get("topics", topic_id)
            if rec is None:
                raise not_found("topic", topic_id)
            topic = Topic.from_doc(rec.value)
            if expected_version is not None and topic.version != expected_version:
                raise ForumError(
                    "STALE_VERSION",
                    f"topic is at version {topic.version}, caller expected {expected_version}",
                )
            updated, ops = self._transition_ops(rec.version, topic, event, actor, duplicate_of)
            try:
                self.store.apply(ops)
                return updated
            except ForumError as err:
                if err.code != "STALE_VERSION":
                    raise
                if expected_version is not None:
                    raise
        raise ForumError("STALE_VERSION", "write contention persisted; retry the request")

    def _transition_ops(
        self,
        record_version: int,
        topic: Topic,
        event: LifecycleEvent,
        actor: Stakeholder,
        duplicate_of: str | None = None,
    ) -> tuple[Topic, list[PutOp]]:
        now = self._clock()
        tx = self.store.get("transitions", topic.id)
        assert tx is not None  # created with the topic
        sequence = len(tx.value["records"]) + 1
        updated, record = model.apply_event(
            topic, event, actor.id, actor.role, at=now, sequence=sequence
        )
        ops = [
            PutOp("topics", topic.id, updated.to_doc(), expected=record_version),
            PutOp(
                "transitions",
                topic.id,
                {"records": tx.value["records"] + [record.to_doc()]},
                expected=tx.version,
            ),
        ]
        # Reaching agreement is the trust signal: bump the author each time
        # the topic lands in LOCKED.
        if updated.state is TopicState.LOCKED and self.config.reputation_per_lock:
            author_rec = self.store.get("stakeholders", topic.author)
            if author_rec is not None:
                author = Stakeholder.from_doc(author_rec.value)
                ops.append(
                    PutOp(
                        "stakeholders",
                        author.id,
                        replace(
                            author,
                            reputation=author.reputation + self.config.reputation_per_lock,
                        ).to_doc(),
                        expected=author_rec.version,
                    )
                )
        if event is LifecycleEvent.CANCEL_DUPLICATE and duplicate_of is not None:
            if duplicate_of == topic.id:
                raise ForumError("SELF_RELATION", "a topic cannot duplicate itself")
            if self.store.get("topics", duplicate_of) is None:
                raise not_found("topic", duplicate_of)
            rel_key = f"{topic.id}|{duplicate_of}|{RelationKind.DUPLICATE_OF.value}"
            if self.store.get("relations", rel_key) is None:
                rel = ReqRelation(topic.id, duplicate_of, RelationKind.DUPLICATE_OF, actor.id, now)
                ops.append(PutOp("relations", rel_key, rel.to_doc()))
        return updated, ops

    def allowed_events(self, topic_id: str, role: Role) -> list[LifecycleEvent]:
        topic = self.get_topic(topic_id)
        return sorted(model.allowed_events(topic.state, role), key=lambda e: e.value)

    def transitions(self, topic_id: str) -> list[TransitionRecord]:
        self.get_topic(topic_id)
        tx = self.store.get("transitions", topic_id)
        return [TransitionRecord.from_doc(d) for d in (tx.value["records"] if tx else [])]

    def link_requirements(
        self, actor: Stakeholder, source: str, target: str, kind: RelationKind
    ) -> ReqRelation:
        require_right(actor, RIGHT_LINK_REQUIREMENTS)
        if source == target:
            raise ForumError("SELF_RELATION", "a topic cannot relate to itself")
        for tid in (source, target):
            if self.store.get("topics", tid) is None:
                raise not_found("topic", tid)
        key = f"{source}|{target}|{kind.value}"
        existing = self.store.get("relations", key)
        if existing is not None:
            return ReqRelation.from_doc(existing.value)
        relation = ReqRelation(source, target, kind, actor.id, self._clock())
        try:
            self.store.apply([PutOp("relations", key, relation.to_doc())])
        except ForumError as err:
            if err.code == "STALE_VERSION":  # lost a race to an identical link
                return ReqRelation.from_doc(self.store.get("relations", key).value)
            raise
        return relation

    def relations_of(self, topic_id: str) -> list[ReqRelation]:
        return sorted(
            (
                ReqRelation.from_doc(rec.value)
                for rec in self.store.scan("relations").values()
                if rec.value["source"] == topic_id or rec.value["target"] == topic_id
            ),
            key=lambda r: (r.source, r.target, r.kind.value),
        )

    # -- posts -------------------------------------------------------------------

    def add_post(self, actor: Stakeholder, topic_id: str, body: str) -> Post:
        require_right(actor, RIGHT_ADD_POST)

        def attempt() -> Post:
            topic = self.get_topic(topic_id)
            if topic.state is not TopicState.SUGGESTION_COLLECTED:
                raise ForumError(
                    "TOPIC_NOT_OPEN",
                    f"topic is {topic.state.value}; posting needs SUGGESTION_COLLECTED",
                )
            thread = self.store.get("threads", topic_id)
            posts = [Post.from_doc(d) for d in thread.value["posts"]]
            updated = merged_append(
                posts, topic_id, actor.id, body, self._clock(), new_id("post")
            )
            ops = [
                PutOp(
                    "threads",
                    topic_id,
                    {"posts": [p.to_doc() for p in updated]},
                    expected=thread.version,
                )
            ]
            ops.extend(
                self._score_ops(actor.id, self.config.score_per_post, "system", f"post:{topic_id}")
            )
            self.store.apply(ops)
            return updated[-1]

        return self._retrying(attempt)

    def posts_of(self, topic_id: str) -> list[Post]:
        self.get_topic(topic_id)
        thread = self.store.get("threads", topic_id)
        posts = [Post.from_doc(d) for d in (thread.value["posts"] if thread else [])]
        return sorted(posts, key=lambda p: (p.first_at, p.id))

    # -- polls ---------------------------------------------------------------------

    def open_poll(
        self,
        actor: Stakeholder,
        topic_id: str,
        kind: PollKind,
        options: Sequence[str] | None = None,
    ) -> Poll:
        require_right(actor, RIGHT_OPEN_POLL)
        topic = self.get_topic(topic_id)
        if topic.state not in (TopicState.SUGGESTION_COLLECTED, TopicState.NEGOTIATION):
            raise ForumError(
                "TOPIC_NOT_OPEN",
                f"polls need SUGGESTION_COLLECTED or NEGOTIATION, topic is {topic.state.value}",
            )
        poll = Poll(
            id=new_id("poll"),
            topic_id=topic_id,
            kind=kind,
            options=poll_options(kind, options),
            state=PollState.OPEN,
            ballots={},
        )
        self.store.apply([PutOp("polls", poll.id, poll.to_doc())])
        return poll

    def get_poll(self, poll_id: str) -> Poll:
        rec = self.store.get("polls", poll_id)
        if rec is None:
            raise not_found("poll", poll_id)
        return Poll.from_doc(rec.value)

    def cast_vote(self, actor: Stakeholder, poll_id: str, option: str) -> Poll:
        require_right(actor, RIGHT_VOTE)

        def attempt() -> Poll:
            rec = self.store.get("polls", poll_id)
            if rec is None:
                raise not_found("poll", poll_id)
            poll = Poll.from_doc(rec.value)
            first_ballot = actor.id not in poll.ballots
            updated = cast_ballot(poll, actor.id, option)
            ops = [PutOp("polls", poll_id, updated.to_doc(), expected=rec.version)]
            if first_ballot:
                # Changing a standing vote is not new activity.
                ops.extend(
                    self._score_ops(actor.id, self.config.score_per_vote, "system", f"vote:{poll_id}")
                )
            self.store.apply(ops)
            return updated

        return self._retrying(attempt)

    def close_poll(self, actor: Stakeholder, poll_id: str) -> Poll:
        require_right(actor, RIGHT_OPEN_POLL)

        def attempt() -> Poll:
            rec = self.store.get("polls", poll_id)
            if rec is None:
                raise not_found("poll", poll_id)
            poll = Poll.from_doc(rec.value)
            if poll.state is PollState.CLOSED:
                raise ForumError("POLL_CLOSED", f"poll {poll_id!r} is already closed")
            updated = replace(poll, state=PollState.CLOSED)
            self.store.apply([PutOp("polls", poll_id, updated.to_doc(), expected=rec.version)])
            return updated

        return self._retrying(attempt)

    def poll_tally(self, poll_id: str) -> dict[str, int]:
        return tally(self.get_poll(poll_id))

    def polls_of(self, topic_id: str) -> list[Poll]:
        return sorted(
            (
                Poll.from_doc(rec.value)
                for rec in self.store.scan("polls").values()
                if rec.value["topic_id"] == topic_id
            ),
            key=lambda p: p.id,
        )

    # -- questionnaires ----------------------------------------------------------------

    def define_questionnaire(
        self, actor: Stakeholder, topic_id: str, questions: Sequence[Question]
    ) -> Questionnaire:
        require_right(actor, RIGHT_DEFINE_QUESTIONNAIRE)
        topic = self.get_topic(topic_id)
        if topic.kind is not TopicKind.QUESTIONNAIRE:
            raise ForumError("WRONG_TOPIC_KIND", "questions attach to questionnaire topics only")
        if self.store.get("questionnaires", topic_id) is not None:
            raise ForumError("ALREADY_DEFINED", f"topic {topic_id!r} already has its questions")
        if not questions:
            raise ForumError("ARITY_MISMATCH", "a questionnaire needs at least one question")
        for q in questions:
            if q.kind is not QuestionKind.FREE_TEXT and len(q.choices) < 2:
                raise ForumError(
                    "ARITY_MISMATCH", f"choice question {q.prompt!r} needs at least two choices"
                )
        questionnaire = Questionnaire(topic_id, tuple(questions), {})
        self.store.apply([PutOp("questionnaires", topic_id, questionnaire.to_doc())])
        return questionnaire

    def get_questionnaire(self, topic_id: str) -> Questionnaire:
        rec = self.store.get("questionnaires", topic_id)
        if rec is None:
            raise not_found("questionnaire for topic", topic_id)
        return Questionnaire.from_doc(rec.value)

    def submit_response(
        self, actor: Stakeholder, topic_id: str, answers: Sequence[Sequence[str]]
    ) -> None:
        require_right(actor, RIGHT_RESPOND)

        def attempt() -> None:
            topic = self.get_topic(topic_id)
            if topic.kind is not TopicKind.QUESTIONNAIRE:
                raise ForumError("WRONG_TOPIC_KIND", "responses attach to questionnaire topics only")
            if topic.state is not TopicState.SUGGESTION_COLLECTED:
                raise ForumError(
                    "TOPIC_NOT_OPEN",
                    f"topic is {topic.state.value}; responses need SUGGESTION_COLLECTED",
                )
            rec = self.store.get("questionnaires", topic_id)
            if rec is None:
                raise not_found("questionnaire for topic", topic_id)
            questionnaire = Questionnaire.from_doc(rec.value)
            check_answers(questionnaire.questions, answers)
            first_response = actor.id not in questionnaire.responses
            responses = dict(questionnaire.responses)
            responses[actor.id] = [list(a) for a in answers]
            updated = replace(questionnaire, responses=responses)
            ops = [PutOp("questionnaires", topic_id, updated.to_doc(), expected=rec.version)]
            if first_response:
                ops.extend(
                    self._score_ops(
                        actor.id, self.config.score_per_response, "system", f"response:{topic_id}"
                    )
                )
            self.store.apply(ops)

        self._retrying(attempt)

    def questionnaire_summary(self, topic_id: str) -> list[dict[str, Any]]:
        return summarize(self.get_questionnaire(topic_id))

    # -- negotiation sessions --------------------------------------------------------------

    def open_session(
        self, actor: Stakeholder, topic_id: str, participant_ids: Sequence[str]
    ) -> NegotiationSession:
        require_right(actor, RIGHT_OPEN_SESSION)
        topic = self.get_topic(topic_id)
        if topic.state is not TopicState.NEGOTIATION:
            raise ForumError(
                "TOPIC_NOT_OPEN",
                f"negotiation sessions need NEGOTIATION, topic is {topic.state.value}",
            )
        participants = set(participant_ids) | {actor.id}
        involved = {topic.author} | {p.author for p in self.posts_of(topic_id)}
        for pid in sorted(participants):
            user = self.get_stakeholder(pid)
            invitable = (
                user.role is Role.MANAGEMENT
                or pid in involved
                or RIGHT_NEGOTIATION_INVITABLE in user.rights
            )
            if not invitable:
                raise forbidden(
                    f"{user.name!r} is neither involved in the topic nor negotiation-invitable"
                )
        session = NegotiationSession(
            id=new_id("ses"),
            topic_id=topic_id,
            participants=frozenset(participants),
            messages=(),
            state=SessionState.OPEN,
        )
        self.store.apply([PutOp("sessions", session.id, session.to_doc())])
        return session

    def get_session(self, session_id: str) -> NegotiationSession:
        rec = self.store.get("sessions", session_id)
        if rec is None:
            raise not_found("session", session_id)
        return NegotiationSession.from_doc(rec.value)

    def post_message(self, actor: Stakeholder, session_id: str, text: str) -> ChatMessage:
        def attempt() -> ChatMessage:
            rec = self.store.get("sessions", session_id)
            if rec is None:
                raise not_found("session", session_id)
            session = NegotiationSession.from_doc(rec.value)
            updated, message = append_message(session, actor.id, text, self._clock())
            self.store.apply([PutOp("sessions", session_id, updated.to_doc(), expected=rec.version)])
            return message

        return self._retrying(attempt)

    def session_messages(
        self, actor: Stakeholder, session_id: str, since: int = 0
    ) -> list[ChatMessage]:
        session = self.get_session(session_id)
        if actor.id not in session.participants and actor.role is not Role.MANAGEMENT:
            raise ForumError(
                "NOT_PARTICIPANT", f"{actor.name!r} is not in session {session_id!r}"
            )
        return messages_after(session, since)

    def close_session(
        self, actor: Stakeholder, session_id: str, outcome: SessionOutcome
    ) -> tuple[NegotiationSession, Topic]:
        """Record the outcome and fire the matching lifecycle event in one
        atomic step; an impossible transition leaves the session open."""
        require_right(actor, RIGHT_OPEN_SESSION)

        def attempt() -> tuple[NegotiationSession, Topic]:
            rec = self.store.get("sessions", session_id)
            if rec is None:
                raise not_found("session", session_id)
            session = NegotiationSession.from_doc(rec.value)
            if session.state is SessionState.CLOSED:
                raise ForumError("SESSION_CLOSED", f"session {session_id!r} is already closed")
            closed = replace(session, state=SessionState.CLOSED, outcome=outcome)
            topic_rec = self.store.get("topics", session.topic_id)
            if topic_rec is None:
                raise not_found("topic", session.topic_id)
            topic = Topic.from_doc(topic_rec.value)
            updated_topic, ops = self._transition_ops(
                topic_rec.version, topic, OUTCOME_EVENTS[outcome], actor
            )
            ops.append(PutOp("sessions", session_id, closed.to_doc(), expected=rec.version))
            self.store.apply(ops)
            return closed, updated_topic

        return self._retrying(attempt)

    def sessions_of(self, topic_id: str) -> list[NegotiationSession]:
        return sorted(
            (
                NegotiationSession.from_doc(rec.value)
                for rec in self.store.scan("sessions").values()
                if rec.value["topic_id"] == topic_id
            ),
            key=lambda s: s.id,
        )

    # -- capability tests --------------------------------------------------------

    def add_capability_test(
        self,
        name: str,
        questions: Sequence[ExamQuestion],
        pass_threshold: int,
        level_map: Sequence[tuple[int, Capability]],
    ) -> CapabilityTest:
        test = build_capability_test(new_id("tst"), name, questions, pass_threshold, level_map)
        self.store.apply([PutOp("tests", test.id, test.to_doc())])
        return test

    def get_test(self, test_id: str) -> CapabilityTest:
        rec = self.store.get("tests", test_id)
        if rec is None:
            raise not_found("capability test", test_id)
        return CapabilityTest.from_doc(rec.value)

    def list_tests(self) -> list[CapabilityTest]:
        return sorted(
            (CapabilityTest.from_doc(rec.value) for rec in self.store.scan("tests").values()),
            key=lambda t: t.id,
        )

    def grade_capability_test(
        self, actor: Stakeholder, test_id: str, answers: Sequence[int]
    ) -> tuple[TestResult, Stakeholder]:
        """Grade and, on improvement, raise the caller's capability and rights."""
        require_right(actor, RIGHT_TAKE_TEST)
        test = self.get_test(test_id)
        result = grade_test(test, answers)

        def attempt() -> Stakeholder:
            rec = self.store.get("stakeholders", actor.id)
            if rec is None:
                raise not_found("stakeholder", actor.id)
            user = Stakeholder.from_doc(rec.value)
            updated = apply_capability(user, result)
            if updated is not user:
                self.store.apply(
                    [PutOp("stakeholders", actor.id, updated.to_doc(), expected=rec.version)]
                )
            return updated

        return result, self._retrying(attempt)

    # -- incentives -----------------------------------------------------------------

    def _ledger_append_op(self, entries: Sequence[LedgerEntry]) -> PutOp:
        rec = self.store.get("ledger", "main")
        assert rec is not None  # bootstrapped
        return PutOp(
            "ledger",
            "main",
            {"entries": rec.value["entries"] + [e.to_doc() for e in entries]},
            expected=rec.version,
        )

    def _score_ops(
        self,
        subject_id: str,
        delta: int,
        actor_id: str,
        reason: str,
        *,
        reputation_delta: int = 0,
    ) -> list[PutOp]:
        """Batch fragment moving ``delta`` score (plus any reputation change)
        together with its ledger entry."""
        if delta == 0 and reputation_delta == 0:
            return []
        rec = self.store.get("stakeholders", subject_id)
        if rec is None:
            raise not_found("stakeholder", subject_id)
        user = Stakeholder.from_doc(rec.value)
        if user.score + delta < 0:
            raise ForumError(
                "INSUFFICIENT_SCORE",
                f"{user.name!r} has {user.score} score, needs {-delta}",
            )
        updated = replace(
            user, score=user.score + delta, reputation=user.reputation + reputation_delta
        )
        ops = [PutOp("stakeholders", subject_id, updated.to_doc(), expected=rec.version)]
        if delta:
            ops.append(
                self._ledger_append_op(
                    [LedgerEntry(actor_id, subject_id, delta, reason, self._clock())]
                )
            )
        return ops

    def award_score(
        self, actor: Stakeholder, user_id: str, amount: int, reason: str = "award"
    ) -> Stakeholder:
        require_right(actor, RIGHT_AWARD_SCORE)
        if amount <= 0:
            raise ForumError("INVALID_AMOUNT", "award amount must be positive")

        def attempt() -> Stakeholder:
            self.store.apply(self._score_ops(user_id, amount, actor.id, reason))
            return self.get_stakeholder(user_id)

        return self._retrying(attempt)

    def accept_answer(self, actor: Stakeholder, topic_id: str, post_id: str) -> Stakeholder:
        """Pay the bounty to the answering author, once per reward topic."""
        require_right(actor, RIGHT_ACCEPT_ANSWER)

        def attempt() -> Stakeholder:
            rec = self.store.get("topics", topic_id)
            if rec is None:
                raise not_found("topic", topic_id)
            topic = Topic.from_doc(rec.value)
            if topic.kind is not TopicKind.REWARD:
                raise ForumError("WRONG_TOPIC_KIND", "answers are accepted on reward topics only")
            if topic.accepted_post_id is not None:
                raise ForumError(
                    "ALREADY_ACCEPTED", f"topic {topic_id!r} already has an accepted answer"
                )
            post = next((p for p in self.posts_of(topic_id) if p.id == post_id), None)
            if post is None:
                raise not_found("post in this topic", post_id)
            try:
                bounty = int(topic.fields.get("bounty", "").strip())
            except ValueError:
                bounty = 0
            if bounty <= 0:
                raise ForumError(
                    "NO_BOUNTY", "the topic's bounty field must be a positive whole number"
                )
            marked = replace(topic, accepted_post_id=post_id, updated_at=self._clock())
            ops = [PutOp("topics", topic_id, marked.to_doc(), expected=rec.version)]
            ops.extend(
                self._score_ops(
                    post.author,
                    bounty,
                    actor.id,
                    f"reward-answer:{topic_id}",
                    reputation_delta=self.config.reputation_per_accept,
                )
            )
            self.store.apply(ops)
            return self.get_stakeholder(post.author)

        return self._retrying(attempt)

    def add_gift(self, name: str, cost: int, stock: int) -> Gift:
        if cost <= 0:
            raise ForumError("INVALID_AMOUNT", "gift cost must be positive")
        if stock < 0:
            raise ForumError("INVALID_AMOUNT", "gift stock cannot be negative")
        gift = Gift(new_id("gft"), name, cost, stock)
        self.store.apply([PutOp("gifts", gift.id, gift.to_doc())])
        return gift

    def get_gift(self, gift_id: str) -> Gift:
        rec = self.store.get("gifts", gift_id)
        if rec is None:
            raise not_found("gift", gift_id)
        return Gift.from_doc(rec.value)

    def list_gifts(self) -> list[Gift]:
        return sorted(
            (Gift.from_doc(rec.value) for rec in self.store.scan("gifts").values()),
            key=lambda g: g.id,
        )

    def redeem(self, actor: Stakeholder, gift_id: str) -> tuple[Stakeholder, Gift]:
        """Spend score on a gift; fails whole, never charges without stock."""
        require_right(actor, RIGHT_REDEEM)

        def attempt() -> tuple[Stakeholder, Gift]:
            rec = self.store.get("gifts", gift_id)
            if rec is None:
                raise not_found("gift", gift_id)
            gift = Gift.from_doc(rec.value)
            if gift.stock < 1:
                raise ForumError("OUT_OF_STOCK", f"gift {gift.name!r} is out of stock")
            taken = replace(gift, stock=gift.stock - 1)
            ops = [PutOp("gifts", gift_id, taken.to_doc(), expected=rec.version)]
            ops.extend(self._score_ops(actor.id, -gift.cost, actor.id, f"redeem:{gift_id}"))
            self.store.apply(ops)
            return self.get_stakeholder(actor.id), taken

        return self._retrying(attempt)

    def ledger_entries(self) -> list[LedgerEntry]:
        rec = self.store.get("ledger", "main")
        return [LedgerEntry.from_doc(d) for d in (rec.value["entries"] if rec else [])]

    def ledger_jsonl(self) -> str:
        import json

        return "\n".join(json.dumps(e.to_doc(), sort_keys=True) for e in self.ledger_entries())

    # -- direct messages -----------------------------------------------------------

    def send_message(self, actor: Stakeholder, to_id: str, text: str) -> dict[str, Any]:
        require_right(actor, RIGHT_SEND_MESSAGE)
        if not text.strip():
            raise ForumError("EMPTY_BODY", "message text must be non-empty")

        def attempt() -> dict[str, Any]:
            if self.store.get("stakeholders", to_id) is None:
                raise not_found("stakeholder", to_id)
            rec = self.store.get("inboxes", to_id)
            assert rec is not None  # created at registration
            message = {
                "sequence": len(rec.value["messages"]) + 1,
                "from": actor.id,
                "text": text,
                "at": self._clock(),
            }
            self.store.apply(
                [
                    PutOp(
                        "inboxes",
                        to_id,
                        {"messages": rec.value["messages"] + [message]},
                        expected=rec.version,
                    )
                ]
            )
            return message

        return self._retrying(attempt)

    def inbox(self, actor: Stakeholder, since: int = 0) -> list[dict[str, Any]]:
        rec = self.store.get("inboxes", actor.id)
        messages = rec.value["messages"] if rec else []
        return [m for m in messages if m["sequence"] > since]

    # -- aggregation and export --------------------------------------------------------

    def aggregate(self, topic_id: str) -> dict[str, Any]:
        """The whole thread as one document: no pagination, every post once."""
        topic = self.get_topic(topic_id)
        posts = self.posts_of(topic_id)
        polls = self.polls_of(topic_id)
        view: dict[str, Any] = {
            "topic": topic.to_doc(),
            "state": topic.state.value,
            "posts": [p.to_doc() for p in posts],
            "polls": [{**p.to_doc(), "tally": tally(p)} for p in polls],
            "questionnaire": None,
            "negotiations": [
                {
                    "id": s.id,
                    "participants": sorted(s.participants),
                    "state": s.state.value,
                    "outcome": s.outcome.value if s.outcome else None,
                    "message_count": len(s.messages),
                }
                for s in self.sessions_of(topic_id)
            ],
        }
        if self.store.get("questionnaires", topic_id) is not None:
            view["questionnaire"] = self.questionnaire_summary(topic_id)
        return view

    def export_requirements(
        self, actor: Stakeholder | None, states: Iterable[TopicState] | None = None
    ) -> dict[str, Any]:
        if actor is not None:
            require_right(actor, RIGHT_EXPORT)
        wanted = set(states) if states else None
        topics = sorted(
            (Topic.from_doc(rec.value) for rec in self.store.scan("topics").values()),
            key=lambda t: (t.created_at, t.id),
        )
        entries = []
        for topic in topics:
            if wanted is not None and topic.state not in wanted:
                continue
            view = self.aggregate(topic.id)
            view["transitions"] = [r.to_doc() for r in self.transitions(topic.id)]
            view["relations"] = [r.to_doc() for r in self.relations_of(topic.id)]
            entries.append(view)
        return {"generated_at": self._clock(), "topics": entries}

    # -- seeding -------------------------------------------------------------------

    def seed(self, fixture: Mapping[str, Any]) -> dict[str, int]:
        """Load stakeholders, templates, gifts, and tests from a fixture dict."""
        from .templates import build_template

        unknown = set(fixture) - {"stakeholders", "templates", "gifts", "tests"}
        if unknown:
            raise ForumError(
                "MALFORMED_FIXTURE", f"unknown fixture sections: {sorted(unknown)}"
            )
        counts = {"stakeholders": 0, "templates": 0, "gifts": 0, "tests": 0}
        try:
            for entry in fixture.get("stakeholders", []):
                self.register_stakeholder(
                    entry["handle"],
                    entry["secret"],
                    Role(entry.get("role", "GENERAL")),
                    score=int(entry.get("score", 0)),
                    reputation=int(entry.get("reputation", 0)),
                    capability=Capability(entry.get("capability", "UNRATED")),
                )
                counts["stakeholders"] += 1
            for entry in fixture.get("templates", []):
                template = build_template(
                    entry.get("id", new_id("tpl")),
                    entry["name"],
                    TopicKind(entry["topic_kind"]),
                    [TemplateItem.from_doc(d) for d in entry["items"]],
                    [ItemRelation.from_doc(d) for d in entry.get("relations", [])],
                )
                self.store.apply([PutOp("templates", template.id, template.to_doc())])
                counts["templates"] += 1
            for entry in fixture.get("gifts", []):
                self.add_gift(entry["name"], int(entry["cost"]), int(entry["stock"]))
                counts["gifts"] += 1
            for entry in fixture.get("tests", []):
                self.add_capability_test(
                    entry["name"],
                    [
                        ExamQuestion(q["prompt"], tuple(q["choices"]), int(q["answer_index"]))
                        for q in entry["questions"]
                    ],
                    int(entry["pass_threshold"]),
                    [(int(t), Capability(lv)) for t, lv in entry["level_map"]],
                )
                counts["tests"] += 1
        except (KeyError, TypeError, ValueError) as exc:
            raise ForumError("MALFORMED_FIXTURE", f"bad fixture entry: {exc}") from exc
        return counts
