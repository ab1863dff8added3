"""Core domain entities and the requirement lifecycle state machine.

A requirement lives as a Topic whose ``state`` moves along a fixed edge set,
always through :func:`apply_event`, leaving one TransitionRecord per change.
Folding a topic's records from NEW reproduces its stored state exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import ForumError


class Role(Enum):
    GENERAL = "GENERAL"
    MANAGEMENT = "MANAGEMENT"


class TopicKind(Enum):
    OPINION = "OPINION"
    QUESTIONNAIRE = "QUESTIONNAIRE"
    REWARD = "REWARD"


class TopicState(Enum):
    NEW = "NEW"
    SUGGESTION_COLLECTED = "SUGGESTION_COLLECTED"
    NEGOTIATION = "NEGOTIATION"
    UNLOCKED = "UNLOCKED"
    LOCKED = "LOCKED"
    CANCELLED = "CANCELLED"


class LifecycleEvent(Enum):
    """One member per lifecycle action, in diagram order.

    SUBMIT is creation into NEW and never appears as a state edge; the
    remaining ten events each drive exactly one edge in EDGES.
    """

    SUBMIT = "SUBMIT"
    OPEN_FOR_SUGGESTIONS = "OPEN_FOR_SUGGESTIONS"
    START_NEGOTIATION = "START_NEGOTIATION"
    LOCK_CONSISTENT = "LOCK_CONSISTENT"
    CANCEL_FROM_NEGOTIATION = "CANCEL_FROM_NEGOTIATION"
    UNLOCK = "UNLOCK"
    RENEGOTIATE = "RENEGOTIATE"
    LOCK_DIRECT = "LOCK_DIRECT"
    REOPEN_SUGGESTIONS = "REOPEN_SUGGESTIONS"
    CANCEL_DUPLICATE = "CANCEL_DUPLICATE"
    CANCEL_LOW_EVALUATION = "CANCEL_LOW_EVALUATION"


class RelationKind(Enum):
    DUPLICATE_OF = "DUPLICATE_OF"
    DEPENDS_ON = "DEPENDS_ON"
    REFINES = "REFINES"
    CONFLICTS_WITH = "CONFLICTS_WITH"


# The full legal edge set. Every edge is a management action; general users
# never drive the lifecycle. CANCELLED has no outgoing edges.
EDGES: dict[tuple[TopicState, LifecycleEvent], TopicState] = {
    (TopicState.NEW, LifecycleEvent.OPEN_FOR_SUGGESTIONS): TopicState.SUGGESTION_COLLECTED,
    (TopicState.NEW, LifecycleEvent.CANCEL_DUPLICATE): TopicState.CANCELLED,
    (TopicState.SUGGESTION_COLLECTED, LifecycleEvent.START_NEGOTIATION): TopicState.NEGOTIATION,
    (TopicState.SUGGESTION_COLLECTED, LifecycleEvent.LOCK_DIRECT): TopicState.LOCKED,
    (TopicState.SUGGESTION_COLLECTED, LifecycleEvent.CANCEL_LOW_EVALUATION): TopicState.CANCELLED,
    (TopicState.NEGOTIATION, LifecycleEvent.LOCK_CONSISTENT): TopicState.LOCKED,
    (TopicState.NEGOTIATION, LifecycleEvent.CANCEL_FROM_NEGOTIATION): TopicState.CANCELLED,
    (TopicState.NEGOTIATION, LifecycleEvent.REOPEN_SUGGESTIONS): TopicState.SUGGESTION_COLLECTED,
    (TopicState.LOCKED, LifecycleEvent.UNLOCK): TopicState.UNLOCKED,
    (TopicState.UNLOCKED, LifecycleEvent.RENEGOTIATE): TopicState.NEGOTIATION,
}


@dataclass(frozen=True)
class Topic:
    """A requirement thread. ``version`` counts state changes (starts at 1)."""

    id: str
    kind: TopicKind
    template_id: str
    fields: dict[str, str]
    author: str
    state: TopicState
    version: int
    created_at: float
    updated_at: float
    accepted_post_id: str | None = None

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "template_id": self.template_id,
            "fields": dict(self.fields),
            "author": self.author,
            "state": self.state.value,
            "version": self.version,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "accepted_post_id": self.accepted_post_id,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Topic":
        return cls(
            id=doc["id"],
            kind=TopicKind(doc["kind"]),
            template_id=doc["template_id"],
            fields=dict(doc["fields"]),
            author=doc["author"],
            state=TopicState(doc["state"]),
            version=doc["version"],
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
            accepted_post_id=doc.get("accepted_post_id"),
        )


@dataclass(frozen=True)
class ReqRelation:
    """A directed, typed link between two distinct topics."""

    source: str
    target: str
    kind: RelationKind
    created_by: str
    created_at: float

    def to_doc(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "target": self.target,
            "kind": self.kind.value,
            "created_by": self.created_by,
            "created_at": self.created_at,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "ReqRelation":
        return cls(
            source=doc["source"],
            target=doc["target"],
            kind=RelationKind(doc["kind"]),
            created_by=doc["created_by"],
            created_at=doc["created_at"],
        )


@dataclass(frozen=True)
class TransitionRecord:
    """Audit entry for one lifecycle step; ``sequence`` is per-topic, from 1."""

    topic_id: str
    from_state: TopicState
    event: LifecycleEvent
    to_state: TopicState
    actor: str
    at: float
    sequence: int

    def to_doc(self) -> dict[str, Any]:
        return {
            "topic_id": self.topic_id,
            "from": self.from_state.value,
            "event": self.event.value,
            "to": self.to_state.value,
            "actor": self.actor,
            "at": self.at,
            "sequence": self.sequence,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "TransitionRecord":
        return cls(
            topic_id=doc["topic_id"],
            from_state=TopicState(doc["from"]),
            event=LifecycleEvent(doc["event"]),
            to_state=TopicState(doc["to"]),
            actor=doc["actor"],
            at=doc["at"],
            sequence=doc["sequence"],
        )


def transition_target(state: TopicState, event: LifecycleEvent) -> TopicState | None:
    """Target state of the (state, event) edge, or None if no such edge."""
    return EDGES.get((state, event))


def allowed_events(state: TopicState, role: Role) -> frozenset[LifecycleEvent]:
    """Exactly the events legal from ``state`` for ``role``. Total function."""
    if role is not Role.MANAGEMENT:
        return frozenset()
    return frozenset(ev for (st, ev) in EDGES if st is state)


def apply_event(
    topic: Topic,
    event: LifecycleEvent,
    actor_id: str,
    actor_role: Role,
    *,
    at: float,
    sequence: int,
) -> tuple[Topic, TransitionRecord]:
    """Advance ``topic`` along the (state, event) edge.

    Returns the updated snapshot (version + 1) and the audit record to
    append at ``sequence``. Raises INVALID_TRANSITION when no edge exists
    from the current state, FORBIDDEN when the role may not drive it.
    """
    target = EDGES.get((topic.state, event))
    if target is None:
        raise ForumError(
            "INVALID_TRANSITION",
            f"no {event.value} transition from {topic.state.value}",
            {"state": topic.state.value, "event": event.value},
        )
    if actor_role is not Role.MANAGEMENT:
        raise ForumError(
            "FORBIDDEN",
            f"{event.value} requires a management user",
            {"event": event.value},
        )
    updated = replace(topic, state=target, version=topic.version + 1, updated_at=at)
    record = TransitionRecord(
        topic_id=topic.id,
        from_state=topic.state,
        event=event,
        to_state=target,
        actor=actor_id,
        at=at,
        sequence=sequence,
    )
    return updated, record


def creation_record(topic_id: str, actor_id: str, at: float) -> TransitionRecord:
    """The sequence-1 audit entry: submission lands the topic in NEW."""
    return TransitionRecord(
        topic_id=topic_id,
        from_state=TopicState.NEW,
        event=LifecycleEvent.SUBMIT,
        to_state=TopicState.NEW,
        actor=actor_id,
        at=at,
        sequence=1,
    )


def replay(records: Iterable[TransitionRecord]) -> TopicState:
    """Fold audit records from NEW, checking the chain as it goes.

    Raises ValueError on a gap, a from-state mismatch, or an illegal edge;
    a clean audit trail always replays.
    """
    state = TopicState.NEW
    for expected_seq, rec in enumerate(sorted(records, key=lambda r: r.sequence), start=1):
        if rec.sequence != expected_seq:
            raise ValueError(f"sequence gap: expected {expected_seq}, got {rec.sequence}")
        if rec.from_state is not state:
            raise ValueError(
                f"record {rec.sequence} starts from {rec.from_state.value}, "
                f"replay is at {state.value}"
            )
        if rec.event is LifecycleEvent.SUBMIT:
            if rec.sequence != 1 or rec.to_state is not TopicState.NEW:
                raise ValueError("SUBMIT is only valid as the first record, into NEW")
        elif EDGES.get((rec.from_state, rec.event)) is not rec.to_state:
            raise ValueError(
                f"record {rec.sequence} is not a legal edge: "
                f"{rec.from_state.value} --{rec.event.value}--> {rec.to_state.value}"
            )
        state = rec.to_state
    return state
