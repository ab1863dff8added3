"""Stakeholder accounts, rights, capability tests, and incentive mechanics.

Score is spendable activity currency; reputation is a non-spendable trust
counter. Every score change flows through the append-only ledger, so a
stakeholder's balance always equals the sum of their ledger deltas.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Mapping, Sequence

from .errors import ForumError
from .model import Role


class Capability(Enum):
    UNRATED = "UNRATED"
    NOVICE = "NOVICE"
    CONTRIBUTOR = "CONTRIBUTOR"
    EXPERT = "EXPERT"


_CAPABILITY_RANK = {
    Capability.UNRATED: 0,
    Capability.NOVICE: 1,
    Capability.CONTRIBUTOR: 2,
    Capability.EXPERT: 3,
}

# Right keys. Base rights come with the role; capability levels add grants
# on top and never remove anything.
RIGHT_CREATE_TOPIC = "create-topic"
RIGHT_ADD_POST = "add-post"
RIGHT_VOTE = "vote"
RIGHT_RESPOND = "respond-questionnaire"
RIGHT_SEND_MESSAGE = "send-message"
RIGHT_REDEEM = "redeem-gift"
RIGHT_TAKE_TEST = "take-test"
RIGHT_APPLY_EVENT = "apply-lifecycle-event"
RIGHT_DEFINE_TEMPLATE = "define-template"
RIGHT_LINK_REQUIREMENTS = "link-requirements"
RIGHT_OPEN_POLL = "open-poll"
RIGHT_DEFINE_QUESTIONNAIRE = "define-questionnaire"
RIGHT_OPEN_SESSION = "open-negotiation"
RIGHT_CREATE_QUESTIONNAIRE_TOPIC = "create-questionnaire-topic"
RIGHT_CREATE_REWARD_TOPIC = "create-reward-topic"
RIGHT_AWARD_SCORE = "award-score"
RIGHT_ACCEPT_ANSWER = "accept-answer"
RIGHT_EXPORT = "export"
RIGHT_POLL_SUGGEST = "poll-creation-suggest"
RIGHT_NEGOTIATION_INVITABLE = "negotiation-invitable"

GENERAL_BASE_RIGHTS = frozenset(
    {
        RIGHT_CREATE_TOPIC,
        RIGHT_ADD_POST,
        RIGHT_VOTE,
        RIGHT_RESPOND,
        RIGHT_SEND_MESSAGE,
        RIGHT_REDEEM,
        RIGHT_TAKE_TEST,
    }
)

MANAGEMENT_BASE_RIGHTS = GENERAL_BASE_RIGHTS | frozenset(
    {
        RIGHT_APPLY_EVENT,
        RIGHT_DEFINE_TEMPLATE,
        RIGHT_LINK_REQUIREMENTS,
        RIGHT_OPEN_POLL,
        RIGHT_DEFINE_QUESTIONNAIRE,
        RIGHT_OPEN_SESSION,
        RIGHT_CREATE_QUESTIONNAIRE_TOPIC,
        RIGHT_CREATE_REWARD_TOPIC,
        RIGHT_AWARD_SCORE,
        RIGHT_ACCEPT_ANSWER,
        RIGHT_EXPORT,
        RIGHT_NEGOTIATION_INVITABLE,
        RIGHT_POLL_SUGGEST,
    }
)

# Cumulative: each level keeps the grants of the levels below it.
CAPABILITY_GRANTS: dict[Capability, frozenset[str]] = {
    Capability.UNRATED: frozenset(),
    Capability.NOVICE: frozenset(),
    Capability.CONTRIBUTOR: frozenset({RIGHT_POLL_SUGGEST}),
    Capability.EXPERT: frozenset({RIGHT_POLL_SUGGEST, RIGHT_NEGOTIATION_INVITABLE}),
}


def base_rights(role: Role) -> frozenset[str]:
    return MANAGEMENT_BASE_RIGHTS if role is Role.MANAGEMENT else GENERAL_BASE_RIGHTS


def rights_for(role: Role, capability: Capability) -> frozenset[str]:
    return base_rights(role) | CAPABILITY_GRANTS[capability]


@dataclass(frozen=True)
class Stakeholder:
    id: str
    name: str
    role: Role
    rights: frozenset[str]
    reputation: int = 0
    capability: Capability = Capability.UNRATED
    score: int = 0
    secret_hash: str | None = None  # None means the account cannot log in

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "role": self.role.value,
            "rights": sorted(self.rights),
            "reputation": self.reputation,
            "capability": self.capability.value,
            "score": self.score,
            "secret_hash": self.secret_hash,
        }

    def public_doc(self) -> dict[str, Any]:
        doc = self.to_doc()
        del doc["secret_hash"]
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Stakeholder":
        return cls(
            id=doc["id"],
            name=doc["name"],
            role=Role(doc["role"]),
            rights=frozenset(doc["rights"]),
            reputation=doc["reputation"],
            capability=Capability(doc["capability"]),
            score=doc["score"],
            secret_hash=doc.get("secret_hash"),
        )


def check_right(user: Stakeholder, right: str) -> bool:
    """Allow iff the right is in the user's materialized right set."""
    return right in user.rights


def require_right(user: Stakeholder, right: str) -> None:
    if not check_right(user, right):
        raise ForumError("FORBIDDEN", f"{user.name!r} lacks the {right!r} right", {"right": right})


@dataclass(frozen=True)
class ExamQuestion:
    prompt: str
    choices: tuple[str, ...]
    answer_index: int

    def to_doc(self) -> dict[str, Any]:
        return {"prompt": self.prompt, "choices": list(self.choices), "answer_index": self.answer_index}


@dataclass(frozen=True)
class CapabilityTest:
    """Online test whose correct-answer count maps to a capability level."""

    id: str
    name: str
    questions: tuple[ExamQuestion, ...]
    pass_threshold: int
    level_map: tuple[tuple[int, Capability], ...]  # ascending (threshold, level)

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "questions": [q.to_doc() for q in self.questions],
            "pass_threshold": self.pass_threshold,
            "level_map": [[threshold, level.value] for threshold, level in self.level_map],
        }

    def public_doc(self) -> dict[str, Any]:
        # Answer keys stay server-side.
        doc = self.to_doc()
        doc["questions"] = [
            {"prompt": q["prompt"], "choices": q["choices"]} for q in doc["questions"]
        ]
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "CapabilityTest":
        return cls(
            id=doc["id"],
            name=doc["name"],
            questions=tuple(
                ExamQuestion(d["prompt"], tuple(d["choices"]), d["answer_index"])
                for d in doc["questions"]
            ),
            pass_threshold=doc["pass_threshold"],
            level_map=tuple((t, Capability(lv)) for t, lv in doc["level_map"]),
        )


def build_capability_test(
    test_id: str,
    name: str,
    questions: Sequence[ExamQuestion],
    pass_threshold: int,
    level_map: Sequence[tuple[int, Capability]],
) -> CapabilityTest:
    if pass_threshold > len(questions):
        raise ForumError(
            "MALFORMED_TEST", "pass threshold cannot exceed the question count"
        )
    thresholds = [t for t, _ in level_map]
    if thresholds != sorted(thresholds) or len(set(thresholds)) != len(thresholds):
        raise ForumError("MALFORMED_TEST", "level thresholds must be strictly increasing")
    for question in questions:
        if not (0 <= question.answer_index < len(question.choices)):
            raise ForumError("MALFORMED_TEST", f"bad answer index in {question.prompt!r}")
    return CapabilityTest(test_id, name, tuple(questions), pass_threshold, tuple(level_map))


@dataclass(frozen=True)
class TestResult:
    correct: int
    passed: bool
    level: Capability

    def to_doc(self) -> dict[str, Any]:
        return {"correct": self.correct, "passed": self.passed, "level": self.level.value}


def grade_test(test: CapabilityTest, answers: Sequence[int]) -> TestResult:
    """Count correct choices; the level is the highest map entry reached."""
    if len(answers) != len(test.questions):
        raise ForumError(
            "LENGTH_MISMATCH",
            f"expected {len(test.questions)} answers, got {len(answers)}",
        )
    correct = sum(
        1 for question, chosen in zip(test.questions, answers) if chosen == question.answer_index
    )
    level = Capability.UNRATED
    for threshold, mapped in test.level_map:
        if correct >= threshold:
            level = mapped
    return TestResult(correct=correct, passed=correct >= test.pass_threshold, level=level)


def apply_capability(user: Stakeholder, result: TestResult) -> Stakeholder:
    """Raise the user's capability to the result level; retakes never lower it."""
    if _CAPABILITY_RANK[result.level] <= _CAPABILITY_RANK[user.capability]:
        return user
    return replace(
        user,
        capability=result.level,
        rights=user.rights | CAPABILITY_GRANTS[result.level],
    )


@dataclass(frozen=True)
class Gift:
    id: str
    name: str
    cost: int
    stock: int

    def to_doc(self) -> dict[str, Any]:
        return {"id": self.id, "name": self.name, "cost": self.cost, "stock": self.stock}

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Gift":
        return cls(id=doc["id"], name=doc["name"], cost=doc["cost"], stock=doc["stock"])


@dataclass(frozen=True)
class LedgerEntry:
    """One score movement: ``delta`` is credited (+) or debited (-) to ``subject``."""

    actor: str
    subject: str
    delta: int
    reason: str
    at: float

    def to_doc(self) -> dict[str, Any]:
        return {
            "actor": self.actor,
            "subject": self.subject,
            "delta": self.delta,
            "reason": self.reason,
            "at": self.at,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "LedgerEntry":
        return cls(
            actor=doc["actor"],
            subject=doc["subject"],
            delta=doc["delta"],
            reason=doc["reason"],
            at=doc["at"],
        )


def ledger_balance(entries: Sequence[LedgerEntry], subject: str) -> int:
    return sum(entry.delta for entry in entries if entry.subject == subject)
