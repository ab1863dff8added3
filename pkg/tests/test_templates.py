from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from reqboard.errors import ForumError
from reqboard.model import TopicKind
from reqboard.templates import (
    ItemKind,
    ItemRelation,
    RelationRule,
    Template,
    TemplateItem,
    ViolationCode,
    build_template,
    default_templates,
    render_guidance,
    validate_submission,
)


def opinion_like() -> Template:
    return build_template(
        "tpl-x",
        "Opinion",
        TopicKind.OPINION,
        items=[
            TemplateItem("title", "Title", ItemKind.MANDATORY, max_length=40),
            TemplateItem("problem", "Problem", ItemKind.MANDATORY, max_length=100),
            TemplateItem("solution", "Solution", ItemKind.OPTIONAL, max_length=100),
            TemplateItem("component", "Component", ItemKind.OPTIONAL, max_length=30),
            TemplateItem("estimate", "Estimate", ItemKind.OPTIONAL, max_length=10),
        ],
        relations=[
            ItemRelation(RelationRule.REQUIRES, "solution", "component"),
            ItemRelation(RelationRule.EXCLUDES, "component", "estimate"),
        ],
    )


def codes(violations) -> set[tuple[str, str]]:
    return {(v.code.value, v.item) for v in violations}


def test_well_formed_template_builds():
    template = build_template(
        "tpl-y",
        "Minimal",
        TopicKind.OPINION,
        items=[
            TemplateItem("title", "Title", ItemKind.MANDATORY),
            TemplateItem("problem", "Problem", ItemKind.MANDATORY),
            TemplateItem("solution", "Solution", ItemKind.OPTIONAL),
        ],
    )
    assert template.item_ids() == ["title", "problem", "solution"]


def test_duplicate_item_id_is_malformed():
    with pytest.raises(ForumError) as err:
        build_template(
            "tpl-y", "Broken", TopicKind.OPINION,
            items=[
                TemplateItem("title", "Title", ItemKind.MANDATORY),
                TemplateItem("title", "Again", ItemKind.OPTIONAL),
            ],
        )
    assert err.value.code == "MALFORMED_TEMPLATE"
    assert any("duplicate" in p for p in err.value.details["problems"])


def test_self_relation_is_malformed():
    with pytest.raises(ForumError) as err:
        build_template(
            "tpl-y", "Broken", TopicKind.OPINION,
            items=[TemplateItem("x", "X", ItemKind.MANDATORY)],
            relations=[ItemRelation(RelationRule.EXCLUDES, "x", "x")],
        )
    assert err.value.code == "MALFORMED_TEMPLATE"


def test_mandatory_item_required():
    with pytest.raises(ForumError):
        build_template(
            "tpl-y", "Optional only", TopicKind.OPINION,
            items=[TemplateItem("x", "X", ItemKind.OPTIONAL)],
        )


def test_relation_to_unknown_item_is_malformed():
    with pytest.raises(ForumError):
        build_template(
            "tpl-y", "Broken", TopicKind.OPINION,
            items=[TemplateItem("x", "X", ItemKind.MANDATORY)],
            relations=[ItemRelation(RelationRule.REQUIRES, "x", "ghost")],
        )


def test_valid_submission_is_ok():
    template = opinion_like()
    fields = {"title": "Add search", "problem": "Cannot find topics"}
    assert validate_submission(fields, template) == []


def test_missing_mandatory_reported():
    template = opinion_like()
    violations = validate_submission({"title": "Add search", "problem": "   "}, template)
    assert codes(violations) == {("MISSING_MANDATORY", "problem")}


def test_requires_unmet():
    template = opinion_like()
    fields = {"title": "t", "problem": "p", "solution": "use an index"}
    violations = validate_submission(fields, template)
    assert codes(violations) == {("REQUIRES_UNMET", "solution")}
    assert violations[0].other == "component"


def test_requires_met_when_both_filled():
    template = opinion_like()
    fields = {"title": "t", "problem": "p", "solution": "use an index", "component": "search"}
    assert validate_submission(fields, template) == []


def test_excludes_conflict():
    template = opinion_like()
    fields = {"title": "t", "problem": "p", "component": "search", "estimate": "3d"}
    violations = validate_submission(fields, template)
    assert codes(violations) == {("EXCLUDES_CONFLICT", "component")}


def test_over_length_and_unknown_item():
    template = opinion_like()
    fields = {"title": "x" * 41, "problem": "p", "sneaky": "zzz"}
    assert codes(validate_submission(fields, template)) == {
        ("OVER_LENGTH", "title"),
        ("UNKNOWN_ITEM", "sneaky"),
    }


def test_all_violations_reported_at_once():
    template = opinion_like()
    fields = {"solution": "s", "estimate": "1d", "component": "c", "junk": "j"}
    got = codes(validate_submission(fields, template))
    assert got == {
        ("MISSING_MANDATORY", "title"),
        ("MISSING_MANDATORY", "problem"),
        ("EXCLUDES_CONFLICT", "component"),
        ("UNKNOWN_ITEM", "junk"),
    }


def oracle_violations(fields, template) -> set[tuple[str, str, str]]:
    """Independent re-derivation of the validation rules, one check at a time."""
    known = [item.id for item in template.items]
    out = set()
    for key in fields:
        if key not in known:
            out.add(("UNKNOWN_ITEM", key, ""))

    def filled(item_id):
        return item_id in fields and item_id in known and fields[item_id].strip() != ""

    for item in template.items:
        if item.kind is ItemKind.MANDATORY and not filled(item.id):
            out.add(("MISSING_MANDATORY", item.id, ""))
        if filled(item.id) and len(fields[item.id]) > item.max_length:
            out.add(("OVER_LENGTH", item.id, ""))
    for rel in template.relations:
        if rel.kind is RelationRule.REQUIRES:
            if filled(rel.a) and not filled(rel.b):
                out.add(("REQUIRES_UNMET", rel.a, rel.b))
        else:
            if filled(rel.a) and filled(rel.b):
                out.add(("EXCLUDES_CONFLICT", rel.a, rel.b))
    return out


def test_soundness_against_brute_force_oracle():
    rng = random.Random(20240)
    template = opinion_like()
    ids = template.item_ids() + ["alien", "other"]
    samples = ["", " ", "ok", "x" * 50, "x" * 101, "words words", "\t\n"]
    for _ in range(400):
        fields = {
            key: rng.choice(samples)
            for key in rng.sample(ids, rng.randrange(0, len(ids)))
        }
        got = {(v.code.value, v.item, v.other or "") for v in validate_submission(fields, template)}
        assert got == oracle_violations(fields, template), fields


@given(st.dictionaries(st.sampled_from(["title", "problem", "solution"]), st.text(max_size=50)))
def test_filling_mandatory_never_adds_missing_mandatory(fields):
    template = opinion_like()
    before = {v.item for v in validate_submission(fields, template)
              if v.code is ViolationCode.MISSING_MANDATORY}
    filled = dict(fields)
    filled["title"] = "present"
    after = {v.item for v in validate_submission(filled, template)
             if v.code is ViolationCode.MISSING_MANDATORY}
    assert "title" not in after
    assert after <= before


def test_violations_ignore_entry_order():
    template = opinion_like()
    fields = {"solution": "s", "title": "", "problem": "p"}
    reordered = {"problem": "p", "title": "", "solution": "s"}
    assert codes(validate_submission(fields, template)) == codes(
        validate_submission(reordered, template)
    )


def test_render_guidance_order_and_annotations():
    template = opinion_like()
    descriptor = render_guidance(template)
    assert [item["id"] for item in descriptor["items"]] == template.item_ids()
    by_id = {item["id"]: item for item in descriptor["items"]}
    assert by_id["solution"]["requires"] == ["component"]
    assert by_id["component"]["required_when_filled"] == ["solution"]
    assert by_id["component"]["excludes"] == ["estimate"]
    assert by_id["estimate"]["excludes"] == ["component"]
    assert by_id["title"]["kind"] == "MANDATORY"


def test_default_templates_cover_all_kinds():
    by_kind = {t.topic_kind for t in default_templates()}
    assert by_kind == set(TopicKind)
    opinion = next(t for t in default_templates() if t.topic_kind is TopicKind.OPINION)
    assert opinion.item_ids() == [
        "title", "problem", "rationale", "solution", "component", "priority",
    ]
    mandatory = [i.id for i in opinion.items if i.kind is ItemKind.MANDATORY]
    assert mandatory == ["title", "problem", "rationale"]


def test_template_doc_roundtrip():
    template = opinion_like()
    assert Template.from_doc(template.to_doc()) == template
