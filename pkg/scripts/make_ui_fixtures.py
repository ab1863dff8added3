#!/usr/bin/env python3
"""Regenerate the web client's parity fixtures from the installed package.

Run after changing the default opinion template, validation semantics, or
the lifecycle edge set:

    python3 scripts/make_ui_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from reqboard.model import Role, TopicState, allowed_events
from reqboard.templates import (
    ItemKind,
    ItemRelation,
    RelationRule,
    TemplateItem,
    build_template,
    default_templates,
    render_guidance,
    validate_submission,
)
from reqboard.model import TopicKind

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def validation_fixture() -> dict:
    opinion = next(t for t in default_templates() if t.topic_kind is TopicKind.OPINION)
    long_title = "x" * 121
    exact_title = "x" * 120
    cases = [
        # the reference acceptable submission and close variants
        {"title": "Add search", "problem": "Cannot find topics", "rationale": "Speed"},
        {"title": "Add search", "problem": "Cannot find topics", "rationale": "Speed",
         "solution": "An inverted index", "component": "browse", "priority": "high"},
        {"title": exact_title, "problem": "p", "rationale": "r"},
        {"title": "  padded  ", "problem": "p", "rationale": "r"},
        # missing/blank mandatory items, one at a time and combined
        {"problem": "p", "rationale": "r"},
        {"title": "t", "rationale": "r"},
        {"title": "t", "problem": "p"},
        {"title": "", "problem": "p", "rationale": "r"},
        {"title": "   ", "problem": "p", "rationale": "r"},
        {"title": "\t\n", "problem": "p", "rationale": "r"},
        {"title": "t", "problem": "", "rationale": ""},
        {},
        # over-length values
        {"title": long_title, "problem": "p", "rationale": "r"},
        {"title": "t", "problem": "p", "rationale": "r", "component": "c" * 201},
        {"title": long_title, "problem": "p" * 2001, "rationale": "r"},
        # unknown items, alone and mixed
        {"title": "t", "problem": "p", "rationale": "r", "reporter": "me"},
        {"title": "t", "problem": "p", "rationale": "r", "reporter": "me", "severity": "1"},
        {"reporter": "me"},
        # optional items may stay blank
        {"title": "t", "problem": "p", "rationale": "r", "solution": "", "priority": "  "},
        # unknown item that is blank still counts as unknown
        {"title": "t", "problem": "p", "rationale": "r", "ghost": ""},
        # everything wrong at once
        {"title": long_title, "ghost": "g", "solution": "s" * 2500},
        {"title": "ok", "problem": "fine", "rationale": "sure", "priority": "p" * 51},
    ]
    entries = []
    for fields in cases:
        violations = validate_submission(fields, opinion)
        entries.append(
            {
                "fields": fields,
                "server_ok": not violations,
                "violations": [
                    {"code": v.code.value, "item": v.item, **({"other": v.other} if v.other else {})}
                    for v in violations
                ],
            }
        )

    relational = build_template(
        "tpl-ui-relational",
        "Relational",
        TopicKind.OPINION,
        items=[
            TemplateItem("title", "Title", ItemKind.MANDATORY, "", 40),
            TemplateItem("solution", "Solution", ItemKind.OPTIONAL, "", 100),
            TemplateItem("component", "Component", ItemKind.OPTIONAL, "", 30),
            TemplateItem("estimate", "Estimate", ItemKind.OPTIONAL, "", 10),
        ],
        relations=[
            ItemRelation(RelationRule.REQUIRES, "solution", "component"),
            ItemRelation(RelationRule.EXCLUDES, "component", "estimate"),
        ],
    )
    relational_cases = [
        {"title": "t"},
        {"title": "t", "solution": "s"},
        {"title": "t", "solution": "s", "component": "c"},
        {"title": "t", "component": "c", "estimate": "3d"},
        {"title": "t", "solution": "s", "component": "c", "estimate": "3d"},
    ]
    relational_entries = []
    for fields in relational_cases:
        violations = validate_submission(fields, relational)
        relational_entries.append(
            {
                "fields": fields,
                "server_ok": not violations,
                "violations": [
                    {"code": v.code.value, "item": v.item, **({"other": v.other} if v.other else {})}
                    for v in violations
                ],
            }
        )

    return {
        "template": opinion.to_doc(),
        "guidance": render_guidance(opinion),
        "cases": entries,
        "relational_template": relational.to_doc(),
        "relational_cases": relational_entries,
    }


def allowed_events_fixture() -> dict:
    return {
        "management": {
            state.value: sorted(e.value for e in allowed_events(state, Role.MANAGEMENT))
            for state in TopicState
        },
        "general": {
            state.value: sorted(e.value for e in allowed_events(state, Role.GENERAL))
            for state in TopicState
        },
    }


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "validation_cases.json").write_text(
        json.dumps(validation_fixture(), indent=2, sort_keys=True) + "\n"
    )
    (FIXTURES / "allowed_events.json").write_text(
        json.dumps(allowed_events_fixture(), indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
