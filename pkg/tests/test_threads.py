from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from reqboard.errors import ForumError
from reqboard.threads import (
    ChatMessage,
    NegotiationSession,
    Poll,
    PollKind,
    PollState,
    Post,
    PostSegment,
    PRIORITY_SCALE,
    Question,
    QuestionKind,
    Questionnaire,
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


def build_thread(entries):
    posts: tuple[Post, ...] = ()
    for i, (author, body) in enumerate(entries):
        posts = merged_append(posts, "top-1", author, body, float(i), f"post-{i}")
    return posts


def test_same_author_merges_into_segments():
    posts = build_thread([("u1", "first"), ("u1", "second")])
    assert len(posts) == 1
    assert [seg.body for seg in posts[0].segments] == ["first", "second"]
    assert posts[0].first_at == 0.0


def test_different_author_starts_new_post():
    posts = build_thread([("u1", "first"), ("u2", "reply")])
    assert [p.author for p in posts] == ["u1", "u2"]


def test_first_post_in_empty_thread():
    posts = build_thread([("u1", "hello")])
    assert len(posts) == 1 and posts[0].segments[0].body == "hello"


def test_alternating_authors_never_merge():
    posts = build_thread([("u1", "a"), ("u2", "b"), ("u1", "c")])
    assert [p.author for p in posts] == ["u1", "u2", "u1"]
    assert all(len(p.segments) == 1 for p in posts)


def test_empty_body_rejected():
    with pytest.raises(ForumError) as err:
        merged_append((), "top-1", "u1", "   ", 0.0, "post-0")
    assert err.value.code == "EMPTY_BODY"


def test_merge_clamps_backwards_timestamps():
    posts = build_thread([("u1", "a")])
    posts = merged_append(posts, "top-1", "u1", "b", -5.0, "post-x")
    times = [seg.at for seg in posts[0].segments]
    assert times == sorted(times)


@given(st.lists(st.sampled_from(["u1", "u2", "u3"]), max_size=30))
def test_merge_invariant_and_content_preserved(authors):
    bodies = [f"body-{i}" for i in range(len(authors))]
    posts = build_thread(list(zip(authors, bodies)))
    # no chronologically adjacent posts share an author
    for left, right in zip(posts, posts[1:]):
        assert left.author != right.author
    # concatenated segments reproduce the submissions in order
    flattened = [seg.body for post in posts for seg in post.segments]
    assert flattened == bodies
    # segments only ever group a single author's text
    for post in posts:
        authors_here = {authors[int(seg.body.split("-")[1])] for seg in post.segments}
        assert authors_here == {post.author}


def test_priority_polls_use_fixed_scale():
    assert poll_options(PollKind.PRIORITY, None) == PRIORITY_SCALE
    with pytest.raises(ForumError) as err:
        poll_options(PollKind.PRIORITY, ["low", "high"])
    assert err.value.code == "INVALID_OPTIONS"


def test_preference_polls_need_two_distinct_options():
    assert poll_options(PollKind.PREFERENCE, ["tabs", "spaces"]) == ("tabs", "spaces")
    for bad in ([], ["one"], ["dup", "dup"], ["ok", "  "]):
        with pytest.raises(ForumError):
            poll_options(PollKind.PREFERENCE, bad)


def make_poll(ballots=None, state=PollState.OPEN) -> Poll:
    return Poll("poll-1", "top-1", PollKind.PREFERENCE, ("A", "B"), state, dict(ballots or {}))


def test_tally_counts_one_ballot_per_voter():
    poll = make_poll({"u1": "A", "u2": "A", "u3": "B"})
    assert tally(poll) == {"A": 2, "B": 1}


def test_last_vote_wins_while_open():
    poll = make_poll()
    poll = cast_ballot(poll, "u1", "A")
    poll = cast_ballot(poll, "u1", "B")
    assert tally(poll) == {"A": 0, "B": 1}
    assert sum(tally(poll).values()) == 1


def test_closed_poll_rejects_votes():
    poll = make_poll(state=PollState.CLOSED)
    with pytest.raises(ForumError) as err:
        cast_ballot(poll, "u1", "A")
    assert err.value.code == "POLL_CLOSED"


def test_unknown_option_rejected():
    with pytest.raises(ForumError) as err:
        cast_ballot(make_poll(), "u1", "C")
    assert err.value.code == "UNKNOWN_OPTION"


@given(st.lists(st.tuples(st.sampled_from(["u1", "u2", "u3", "u4"]), st.sampled_from(["A", "B"]))))
def test_tally_total_equals_distinct_voters(votes):
    poll = make_poll()
    for voter, option in votes:
        poll = cast_ballot(poll, voter, option)
    assert sum(tally(poll).values()) == len({voter for voter, _ in votes})


QUESTIONS = (
    Question("Ship it?", QuestionKind.SINGLE_CHOICE, ("yes", "no")),
    Question("Which areas?", QuestionKind.MULTI_CHOICE, ("ui", "api", "docs")),
    Question("Anything else?", QuestionKind.FREE_TEXT),
)


def test_check_answers_accepts_valid_arities():
    check_answers(QUESTIONS, [["yes"], [], ["looks good"]])
    check_answers(QUESTIONS, [["no"], ["ui", "api"], ["x"]])


def test_single_choice_needs_exactly_one():
    with pytest.raises(ForumError) as err:
        check_answers(QUESTIONS, [["yes", "no"], [], ["x"]])
    assert err.value.code == "ARITY_MISMATCH"
    with pytest.raises(ForumError):
        check_answers(QUESTIONS, [[], [], ["x"]])


def test_wrong_answer_count_rejected():
    with pytest.raises(ForumError) as err:
        check_answers(QUESTIONS, [["yes"]])
    assert err.value.code == "ARITY_MISMATCH"


def test_unknown_choice_rejected():
    with pytest.raises(ForumError) as err:
        check_answers(QUESTIONS, [["maybe"], [], ["x"]])
    assert err.value.code == "UNKNOWN_OPTION"


def test_summarize_counts_and_free_text():
    questionnaire = Questionnaire(
        "top-1",
        QUESTIONS,
        {
            "u2": [["yes"], ["ui"], ["later please"]],
            "u1": [["yes"], ["ui", "docs"], ["ship faster"]],
        },
    )
    summary = summarize(questionnaire)
    assert summary[0]["counts"] == {"yes": 2, "no": 0}
    assert summary[1]["counts"] == {"ui": 2, "api": 0, "docs": 1}
    # free text is verbatim, ordered by responder id for determinism
    assert summary[2]["answers"] == ["ship faster", "later please"]


def make_session(**kwargs) -> NegotiationSession:
    defaults = dict(
        id="ses-1",
        topic_id="top-1",
        participants=frozenset({"u1", "u2"}),
        messages=(),
        state=SessionState.OPEN,
    )
    defaults.update(kwargs)
    return NegotiationSession(**defaults)


def test_messages_sequence_from_one():
    session = make_session()
    session, m1 = append_message(session, "u1", "hello", 1.0)
    session, m2 = append_message(session, "u2", "hi", 2.0)
    assert (m1.sequence, m2.sequence) == (1, 2)
    assert messages_after(session, 0) == list(session.messages)
    assert messages_after(session, 1) == [m2]
    assert messages_after(session, 2) == []


def test_non_participant_cannot_post():
    with pytest.raises(ForumError) as err:
        append_message(make_session(), "u3", "intruding", 1.0)
    assert err.value.code == "NOT_PARTICIPANT"


def test_closed_session_rejects_messages():
    session = make_session(state=SessionState.CLOSED)
    with pytest.raises(ForumError) as err:
        append_message(session, "u1", "too late", 1.0)
    assert err.value.code == "SESSION_CLOSED"


def test_empty_message_rejected():
    with pytest.raises(ForumError) as err:
        append_message(make_session(), "u1", " ", 1.0)
    assert err.value.code == "EMPTY_BODY"


@given(st.lists(st.sampled_from(["u1", "u2"]), max_size=20))
def test_sequences_gapless_and_cursor_partition(authors):
    session = make_session()
    for i, author in enumerate(authors):
        session, _ = append_message(session, author, f"m{i}", float(i))
    sequences = [m.sequence for m in session.messages]
    assert sequences == list(range(1, len(authors) + 1))
    for k in range(len(authors) + 1):
        older = [m for m in session.messages if m.sequence <= k]
        newer = messages_after(session, k)
        assert older + newer == list(session.messages)


def test_doc_roundtrips():
    posts = build_thread([("u1", "a"), ("u2", "b")])
    for post in posts:
        assert Post.from_doc(post.to_doc()) == post
    poll = make_poll({"u1": "A"})
    assert Poll.from_doc(poll.to_doc()) == poll
    session, _ = append_message(make_session(), "u1", "hello", 1.0)
    assert NegotiationSession.from_doc(session.to_doc()) == session
    questionnaire = Questionnaire("top-1", QUESTIONS, {"u1": [["yes"], [], ["x"]]})
    assert Questionnaire.from_doc(questionnaire.to_doc()) == questionnaire
