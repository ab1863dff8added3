"""Discussion machinery inside a topic: posts, polls, questionnaires, chat.

Consecutive posts by the same author coalesce into one post with multiple
segments, each segment keeping its own timestamp, so merging never loses
text, order, or audit detail.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Mapping, Sequence

from .errors import ForumError


@dataclass(frozen=True)
class PostSegment:
    body: str
    at: float

    def to_doc(self) -> dict[str, Any]:
        return {"body": self.body, "at": self.at}


@dataclass(frozen=True)
class Post:
    id: str
    topic_id: str
    author: str
    segments: tuple[PostSegment, ...]

    @property
    def first_at(self) -> float:
        return self.segments[0].at

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "topic_id": self.topic_id,
            "author": self.author,
            "segments": [seg.to_doc() for seg in self.segments],
            "first_at": self.first_at,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Post":
        return cls(
            id=doc["id"],
            topic_id=doc["topic_id"],
            author=doc["author"],
            segments=tuple(PostSegment(d["body"], d["at"]) for d in doc["segments"]),
        )


def merged_append(
    posts: Sequence[Post], topic_id: str, author: str, body: str, at: float, post_id: str
) -> tuple[Post, ...]:
    """Append a submission to a thread, merging into the last post when the
    author matches. Segment timestamps stay non-decreasing within a post."""
    if not is_post_body(body):
        raise ForumError("EMPTY_BODY", "post body must be non-empty")
    if posts:
        last = posts[-1]
        if last.author == author:
            at = max(at, last.segments[-1].at)
            merged = replace(last, segments=last.segments + (PostSegment(body, at),))
            return tuple(posts[:-1]) + (merged,)
    return tuple(posts) + (Post(post_id, topic_id, author, (PostSegment(body, at),)),)


def is_post_body(body: str) -> bool:
    return body.strip() != ""


class PollKind(Enum):
    PRIORITY = "PRIORITY"
    PREFERENCE = "PREFERENCE"


class PollState(Enum):
    OPEN = "OPEN"
    CLOSED = "CLOSED"


PRIORITY_SCALE = ("1", "2", "3", "4", "5")


@dataclass(frozen=True)
class Poll:
    """One ballot per voter; the last vote wins while the poll is OPEN."""

    id: str
    topic_id: str
    kind: PollKind
    options: tuple[str, ...]
    state: PollState
    ballots: dict[str, str]

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "topic_id": self.topic_id,
            "kind": self.kind.value,
            "options": list(self.options),
            "state": self.state.value,
            "ballots": dict(self.ballots),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Poll":
        return cls(
            id=doc["id"],
            topic_id=doc["topic_id"],
            kind=PollKind(doc["kind"]),
            options=tuple(doc["options"]),
            state=PollState(doc["state"]),
            ballots=dict(doc["ballots"]),
        )


def poll_options(kind: PollKind, options: Sequence[str] | None) -> tuple[str, ...]:
    """Resolve a new poll's option labels; PRIORITY always uses the 1-5 scale."""
    if kind is PollKind.PRIORITY:
        if options:
            raise ForumError(
                "INVALID_OPTIONS", "priority polls use the fixed 1-5 scale; do not pass options"
            )
        return PRIORITY_SCALE
    opts = tuple(options or ())
    if len(opts) < 2 or len(set(opts)) != len(opts) or any(not o.strip() for o in opts):
        raise ForumError(
            "INVALID_OPTIONS", "preference polls need at least two distinct non-empty options"
        )
    return opts


def cast_ballot(poll: Poll, voter: str, option: str) -> Poll:
    if poll.state is PollState.CLOSED:
        raise ForumError("POLL_CLOSED", f"poll {poll.id!r} is closed")
    if option not in poll.options:
        raise ForumError("UNKNOWN_OPTION", f"{option!r} is not an option of poll {poll.id!r}")
    ballots = dict(poll.ballots)
    ballots[voter] = option
    return replace(poll, ballots=ballots)


def tally(poll: Poll) -> dict[str, int]:
    """Counts per option, zero-filled; one counted ballot per voter."""
    counts = {option: 0 for option in poll.options}
    for option in poll.ballots.values():
        counts[option] += 1
    return counts


class QuestionKind(Enum):
    SINGLE_CHOICE = "SINGLE_CHOICE"
    MULTI_CHOICE = "MULTI_CHOICE"
    FREE_TEXT = "FREE_TEXT"


@dataclass(frozen=True)
class Question:
    prompt: str
    kind: QuestionKind
    choices: tuple[str, ...] = ()

    def to_doc(self) -> dict[str, Any]:
        return {"prompt": self.prompt, "kind": self.kind.value, "choices": list(self.choices)}

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Question":
        return cls(
            prompt=doc["prompt"],
            kind=QuestionKind(doc["kind"]),
            choices=tuple(doc.get("choices", [])),
        )


@dataclass(frozen=True)
class Questionnaire:
    """Structured feedback attached to a questionnaire topic.

    ``responses`` maps stakeholder id to one answer list per question;
    resubmission replaces the previous response set.
    """

    topic_id: str
    questions: tuple[Question, ...]
    responses: dict[str, list[list[str]]]

    def to_doc(self) -> dict[str, Any]:
        return {
            "topic_id": self.topic_id,
            "questions": [q.to_doc() for q in self.questions],
            "responses": {user: [list(a) for a in answers] for user, answers in self.responses.items()},
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Questionnaire":
        return cls(
            topic_id=doc["topic_id"],
            questions=tuple(Question.from_doc(d) for d in doc["questions"]),
            responses={u: [list(a) for a in answers] for u, answers in doc["responses"].items()},
        )


def check_answers(questions: Sequence[Question], answers: Sequence[Sequence[str]]) -> None:
    """Validate answer arity against question kinds.

    SINGLE_CHOICE and FREE_TEXT take exactly one answer; MULTI_CHOICE takes
    any number, including none. Choice answers must name real choices.
    """
    if len(answers) != len(questions):
        raise ForumError(
            "ARITY_MISMATCH",
            f"expected {len(questions)} answer lists, got {len(answers)}",
        )
    for i, (question, given) in enumerate(zip(questions, answers)):
        if question.kind in (QuestionKind.SINGLE_CHOICE, QuestionKind.FREE_TEXT):
            if len(given) != 1:
                raise ForumError(
                    "ARITY_MISMATCH",
                    f"question {i + 1} ({question.kind.value}) takes exactly one answer",
                )
        if question.kind in (QuestionKind.SINGLE_CHOICE, QuestionKind.MULTI_CHOICE):
            for choice in given:
                if choice not in question.choices:
                    raise ForumError(
                        "UNKNOWN_OPTION",
                        f"{choice!r} is not a choice of question {i + 1}",
                    )
            if len(set(given)) != len(given):
                raise ForumError(
                    "ARITY_MISMATCH", f"question {i + 1} has a repeated choice"
                )


def summarize(questionnaire: Questionnaire) -> list[dict[str, Any]]:
    """Per-question rollup: choice counts for choice questions, verbatim
    answers (ordered by responder id) for free text."""
    summary: list[dict[str, Any]] = []
    ordered_users = sorted(questionnaire.responses)
    for i, question in enumerate(questionnaire.questions):
        entry: dict[str, Any] = {"prompt": question.prompt, "kind": question.kind.value}
        if question.kind is QuestionKind.FREE_TEXT:
            entry["answers"] = [questionnaire.responses[user][i][0] for user in ordered_users]
        else:
            counts = {choice: 0 for choice in question.choices}
            for user in ordered_users:
                for choice in questionnaire.responses[user][i]:
                    counts[choice] += 1
            entry["counts"] = counts
        summary.append(entry)
    return summary


class SessionState(Enum):
    OPEN = "OPEN"
    CLOSED = "CLOSED"


class SessionOutcome(Enum):
    CONSISTENT = "CONSISTENT"
    INCONSISTENT_CANCEL = "INCONSISTENT_CANCEL"
    INCONSISTENT_REOPEN = "INCONSISTENT_REOPEN"


@dataclass(frozen=True)
class ChatMessage:
    sequence: int
    author: str
    text: str
    at: float

    def to_doc(self) -> dict[str, Any]:
        return {"sequence": self.sequence, "author": self.author, "text": self.text, "at": self.at}


@dataclass(frozen=True)
class NegotiationSession:
    """Analyst-convened chat; messages carry gapless sequences from 1."""

    id: str
    topic_id: str
    participants: frozenset[str]
    messages: tuple[ChatMessage, ...]
    state: SessionState
    outcome: SessionOutcome | None = None

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "topic_id": self.topic_id,
            "participants": sorted(self.participants),
            "messages": [m.to_doc() for m in self.messages],
            "state": self.state.value,
            "outcome": self.outcome.value if self.outcome else None,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "NegotiationSession":
        return cls(
            id=doc["id"],
            topic_id=doc["topic_id"],
            participants=frozenset(doc["participants"]),
            messages=tuple(
                ChatMessage(d["sequence"], d["author"], d["text"], d["at"])
                for d in doc["messages"]
            ),
            state=SessionState(doc["state"]),
            outcome=SessionOutcome(doc["outcome"]) if doc.get("outcome") else None,
        )


def append_message(
    session: NegotiationSession, author: str, text: str, at: float
) -> tuple[NegotiationSession, ChatMessage]:
    if session.state is SessionState.CLOSED:
        raise ForumError("SESSION_CLOSED", f"session {session.id!r} is closed")
    if author not in session.participants:
        raise ForumError(
            "NOT_PARTICIPANT", f"{author!r} is not a participant of session {session.id!r}"
        )
    if not text.strip():
        raise ForumError("EMPTY_BODY", "message text must be non-empty")
    message = ChatMessage(len(session.messages) + 1, author, text, at)
    return replace(session, messages=session.messages + (message,)), message


def messages_after(session: NegotiationSession, since: int) -> list[ChatMessage]:
    """All messages with sequence > ``since``, in order — the polling contract."""
    return [m for m in session.messages if m.sequence > since]
