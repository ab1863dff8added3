"""Topic templates: ordered mandatory/optional items plus item relationships.

A submission is a map of item-id to text. An item counts as *filled* when its
value is non-empty after trimming whitespace; validation reports every
violation at once, never just the first.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .errors import ForumError
from .model import TopicKind


class ItemKind(Enum):
    MANDATORY = "MANDATORY"
    OPTIONAL = "OPTIONAL"


class RelationRule(Enum):
    REQUIRES = "REQUIRES"  # if a is filled, b must be filled
    EXCLUDES = "EXCLUDES"  # a and b must not both be filled (symmetric)


class ViolationCode(Enum):
    MISSING_MANDATORY = "MISSING_MANDATORY"
    OVER_LENGTH = "OVER_LENGTH"
    REQUIRES_UNMET = "REQUIRES_UNMET"
    EXCLUDES_CONFLICT = "EXCLUDES_CONFLICT"
    UNKNOWN_ITEM = "UNKNOWN_ITEM"


@dataclass(frozen=True)
class TemplateItem:
    id: str
    label: str
    kind: ItemKind
    hint: str = ""
    max_length: int = 2000

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label,
            "kind": self.kind.value,
            "hint": self.hint,
            "max_length": self.max_length,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "TemplateItem":
        return cls(
            id=doc["id"],
            label=doc["label"],
            kind=ItemKind(doc["kind"]),
            hint=doc.get("hint", ""),
            max_length=doc.get("max_length", 2000),
        )


@dataclass(frozen=True)
class ItemRelation:
    kind: RelationRule
    a: str
    b: str

    def to_doc(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "a": self.a, "b": self.b}

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "ItemRelation":
        return cls(kind=RelationRule(doc["kind"]), a=doc["a"], b=doc["b"])


@dataclass(frozen=True)
class Template:
    id: str
    name: str
    topic_kind: TopicKind
    items: tuple[TemplateItem, ...]
    relations: tuple[ItemRelation, ...] = ()

    def item_ids(self) -> list[str]:
        return [item.id for item in self.items]

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "topic_kind": self.topic_kind.value,
            "items": [item.to_doc() for item in self.items],
            "relations": [rel.to_doc() for rel in self.relations],
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Template":
        return cls(
            id=doc["id"],
            name=doc["name"],
            topic_kind=TopicKind(doc["topic_kind"]),
            items=tuple(TemplateItem.from_doc(d) for d in doc["items"]),
            relations=tuple(ItemRelation.from_doc(d) for d in doc.get("relations", [])),
        )


@dataclass(frozen=True)
class Violation:
    """One validation finding. ``other`` is set for the pairwise codes."""

    code: ViolationCode
    item: str
    other: str | None = None
    message: str = ""

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"code": self.code.value, "item": self.item, "message": self.message}
        if self.other is not None:
            doc["other"] = self.other
        return doc


def is_filled(value: str | None) -> bool:
    return value is not None and value.strip() != ""


def template_problems(
    items: Sequence[TemplateItem], relations: Sequence[ItemRelation]
) -> list[str]:
    """Structural problems that make a template definition unacceptable."""
    problems: list[str] = []
    seen: set[str] = set()
    for item in items:
        if not item.id:
            problems.append("item id must be non-empty")
        elif item.id in seen:
            problems.append(f"duplicate item id {item.id!r}")
        seen.add(item.id)
        if item.max_length <= 0:
            problems.append(f"item {item.id!r} max_length must be positive")
    if not any(item.kind is ItemKind.MANDATORY for item in items):
        problems.append("template needs at least one mandatory item")

    seen_pairs: set[tuple[RelationRule, str, str]] = set()
    for rel in relations:
        if rel.a == rel.b:
            problems.append(f"relation {rel.kind.value} cannot link {rel.a!r} to itself")
            continue
        for end in (rel.a, rel.b):
            if end not in seen:
                problems.append(f"relation {rel.kind.value} references unknown item {end!r}")
        # EXCLUDES is unordered, so (a, b) and (b, a) are the same relation.
        if rel.kind is RelationRule.EXCLUDES:
            key = (rel.kind, *sorted((rel.a, rel.b)))
        else:
            key = (rel.kind, rel.a, rel.b)
        if key in seen_pairs:
            problems.append(f"duplicate relation {rel.kind.value}({rel.a!r}, {rel.b!r})")
        seen_pairs.add(key)
    return problems


def build_template(
    template_id: str,
    name: str,
    topic_kind: TopicKind,
    items: Sequence[TemplateItem],
    relations: Sequence[ItemRelation] = (),
) -> Template:
    """Construct a template, rejecting malformed definitions outright."""
    problems = template_problems(items, relations)
    if problems:
        raise ForumError(
            "MALFORMED_TEMPLATE",
            f"template {name!r} has {len(problems)} structural problem(s)",
            {"problems": problems},
        )
    return Template(
        id=template_id,
        name=name,
        topic_kind=topic_kind,
        items=tuple(items),
        relations=tuple(relations),
    )


def validate_submission(
    fields: Mapping[str, str], template: Template
) -> list[Violation]:
    """All violations of ``fields`` against ``template``; empty means ok.

    The result is a set in spirit: entry order of ``fields`` never changes
    which violations come back. Returned sorted for stable comparison.
    """
    known = {item.id: item for item in template.items}
    violations: list[Violation] = []

    for key in fields:
        if key not in known:
            violations.append(
                Violation(ViolationCode.UNKNOWN_ITEM, key, message=f"{key!r} is not a template item")
            )

    filled = {item_id for item_id, value in fields.items() if item_id in known and is_filled(value)}

    for item in template.items:
        if item.kind is ItemKind.MANDATORY and item.id not in filled:
            violations.append(
                Violation(
                    ViolationCode.MISSING_MANDATORY,
                    item.id,
                    message=f"{item.label!r} must be filled in",
                )
            )
        if item.id in filled and len(fields[item.id]) > item.max_length:
            violations.append(
                Violation(
                    ViolationCode.OVER_LENGTH,
                    item.id,
                    message=f"{item.label!r} exceeds {item.max_length} characters",
                )
            )

    for rel in template.relations:
        if rel.kind is RelationRule.REQUIRES and rel.a in filled and rel.b not in filled:
            violations.append(
                Violation(
                    ViolationCode.REQUIRES_UNMET,
                    rel.a,
                    other=rel.b,
                    message=f"{rel.a!r} requires {rel.b!r} to be filled in",
                )
            )
        if rel.kind is RelationRule.EXCLUDES and rel.a in filled and rel.b in filled:
            violations.append(
                Violation(
                    ViolationCode.EXCLUDES_CONFLICT,
                    rel.a,
                    other=rel.b,
                    message=f"{rel.a!r} and {rel.b!r} cannot both be filled in",
                )
            )

    violations.sort(key=lambda v: (v.code.value, v.item, v.other or ""))
    return violations


def render_guidance(template: Template) -> dict[str, Any]:
    """Serializable form descriptor: items in order with relation annotations."""
    requires: dict[str, list[str]] = {}
    required_when: dict[str, list[str]] = {}
    excludes: dict[str, list[str]] = {}
    for rel in template.relations:
        if rel.kind is RelationRule.REQUIRES:
            requires.setdefault(rel.a, []).append(rel.b)
            required_when.setdefault(rel.b, []).append(rel.a)
        else:
            excludes.setdefault(rel.a, []).append(rel.b)
            excludes.setdefault(rel.b, []).append(rel.a)
    return {
        "template_id": template.id,
        "name": template.name,
        "topic_kind": template.topic_kind.value,
        "items": [
            {
                "id": item.id,
                "label": item.label,
                "kind": item.kind.value,
                "hint": item.hint,
                "max_length": item.max_length,
                "requires": sorted(requires.get(item.id, [])),
                "required_when_filled": sorted(required_when.get(item.id, [])),
                "excludes": sorted(excludes.get(item.id, [])),
            }
            for item in template.items
        ],
    }


DEFAULT_OPINION_TEMPLATE_ID = "tpl-opinion-default"
DEFAULT_QUESTIONNAIRE_TEMPLATE_ID = "tpl-questionnaire-default"
DEFAULT_REWARD_TEMPLATE_ID = "tpl-reward-default"


def default_templates() -> list[Template]:
    """Built-in templates so each topic kind can be created out of the box."""
    opinion = build_template(
        DEFAULT_OPINION_TEMPLATE_ID,
        "Opinion topic",
        TopicKind.OPINION,
        items=[
            TemplateItem("title", "Title", ItemKind.MANDATORY, "One-line summary", 120),
            TemplateItem(
                "problem", "Problem description", ItemKind.MANDATORY,
                "What is wrong or missing today?", 2000,
            ),
            TemplateItem(
                "rationale", "Rationale", ItemKind.MANDATORY,
                "Why does this matter, and to whom?", 2000,
            ),
            TemplateItem(
                "solution", "Proposed solution", ItemKind.OPTIONAL,
                "Sketch of how it could work", 2000,
            ),
            TemplateItem(
                "component", "Affected component", ItemKind.OPTIONAL,
                "Part of the product this touches", 200,
            ),
            TemplateItem(
                "priority", "Suggested priority", ItemKind.OPTIONAL,
                "Your view of the urgency", 50,
            ),
        ],
    )
    questionnaire = build_template(
        DEFAULT_QUESTIONNAIRE_TEMPLATE_ID,
        "Questionnaire topic",
        TopicKind.QUESTIONNAIRE,
        items=[
            TemplateItem("title", "Title", ItemKind.MANDATORY, "What is being surveyed", 120),
            TemplateItem(
                "purpose", "Purpose", ItemKind.MANDATORY,
                "What the collected answers will inform", 1000,
            ),
        ],
    )
    reward = build_template(
        DEFAULT_REWARD_TEMPLATE_ID,
        "Reward topic",
        TopicKind.REWARD,
        items=[
            TemplateItem("title", "Title", ItemKind.MANDATORY, "The question in one line", 120),
            TemplateItem(
                "question", "Question", ItemKind.MANDATORY,
                "The full question being bountied", 2000,
            ),
            TemplateItem(
                "bounty", "Bounty", ItemKind.MANDATORY,
                "Score points granted for the accepted answer (whole number)", 10,
            ),
        ],
    )
    return [opinion, questionnaire, reward]


def iter_item_values(template: Template, fields: Mapping[str, str]) -> Iterable[str]:
    """Field values in template item order (missing items as empty strings)."""
    for item in template.items:
        yield fields.get(item.id, "")
