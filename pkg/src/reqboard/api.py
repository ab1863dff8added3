"""HTTP/JSON facade over the engine. All endpoints live under /api/v1.

Every failure returns a structured body {code, message, details}; the
codes are the operation vocabularies of the underlying modules.
"""

from __future__ import annotations

from typing import Any

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from .engine import ForumEngine
from .errors import ForumError
from .model import LifecycleEvent, RelationKind, Role, Topic, TopicKind, TopicState
from .stakeholders import Stakeholder
from .templates import ItemRelation, TemplateItem
from .threads import PollKind, Question, QuestionKind, SessionOutcome
from . import model

_STATUS_BY_CODE = {
    "UNAUTHENTICATED": 401,
    "BAD_CREDENTIALS": 401,
    "FORBIDDEN": 403,
    "NOT_PARTICIPANT": 403,
    "NOT_FOUND": 404,
    "BAD_CURSOR": 404,
    "TEMPLATE_VIOLATIONS": 422,
    "MALFORMED_TEMPLATE": 422,
    "MALFORMED_TEST": 422,
    "MALFORMED_FIXTURE": 422,
    "ARITY_MISMATCH": 422,
    "LENGTH_MISMATCH": 422,
    "EMPTY_BODY": 422,
    "UNKNOWN_OPTION": 422,
    "INVALID_OPTIONS": 422,
    "SELF_RELATION": 422,
    "INVALID_AMOUNT": 422,
    "BAD_REQUEST": 422,
}
_DEFAULT_STATUS = 409  # conflicts: DUPLICATE, INVALID_TRANSITION, STALE_VERSION, ...


class LoginBody(BaseModel):
    handle: str
    secret: str


class TemplateBody(BaseModel):
    name: str
    topic_kind: str
    items: list[dict[str, Any]]
    relations: list[dict[str, Any]] = Field(default_factory=list)


class TopicBody(BaseModel):
    kind: str
    template_id: str
    fields: dict[str, str]
    bypass_dedup: bool = False


class EventBody(BaseModel):
    event: str
    expected_version: int | None = None
    duplicate_of: str | None = None


class RelationBody(BaseModel):
    target: str
    kind: str


class PostBody(BaseModel):
    body: str


class PollBody(BaseModel):
    kind: str
    options: list[str] | None = None


class VoteBody(BaseModel):
    option: str


class QuestionnaireBody(BaseModel):
    questions: list[dict[str, Any]]


class ResponseBody(BaseModel):
    answers: list[list[str]]


class SessionBody(BaseModel):
    participants: list[str] = Field(default_factory=list)


class ChatBody(BaseModel):
    text: str


class CloseBody(BaseModel):
    outcome: str


class GradeBody(BaseModel):
    answers: list[int]


class AwardBody(BaseModel):
    amount: int
    reason: str = "award"


class MessageBody(BaseModel):
    to: str
    text: str


def _enum(kind: type, value: str, what: str):
    try:
        return kind(value)
    except ValueError:
        names = ", ".join(member.value for member in kind)
        raise ForumError("BAD_REQUEST", f"{what} must be one of: {names}", {"got": value})


def _states_param(raw: str | None) -> list[TopicState] | None:
    if not raw:
        return None
    return [_enum(TopicState, part.strip(), "state") for part in raw.split(",") if part.strip()]


def _topic_view(engine: ForumEngine, topic: Topic, role: Role) -> dict[str, Any]:
    doc = topic.to_doc()
    doc["allowed_events"] = sorted(e.value for e in model.allowed_events(topic.state, role))
    return doc


def create_app(engine: ForumEngine, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="reqboard", version="0.1.0", docs_url=None, redoc_url=None)

    @app.exception_handler(ForumError)
    async def forum_error_handler(_request: Request, exc: ForumError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, _DEFAULT_STATUS)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={
                "code": "BAD_REQUEST",
                "message": "request body failed validation",
                "details": {"errors": exc.errors()},
            },
        )

    @app.exception_handler(StarletteHTTPException)
    async def http_error_handler(_request: Request, exc: StarletteHTTPException) -> JSONResponse:
        code = "NOT_FOUND" if exc.status_code == 404 else "BAD_REQUEST"
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": code, "message": str(exc.detail), "details": {}},
        )

    def current_user(authorization: str | None = Header(default=None)) -> Stakeholder:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return engine.session_user(token)

    # -- auth ---------------------------------------------------------------

    @app.post("/api/v1/auth/login")
    def login(body: LoginBody) -> dict[str, Any]:
        session = engine.authenticate(body.handle, body.secret)
        return session.to_doc()

    @app.get("/api/v1/users/me")
    def me(user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return user.public_doc()

    # -- templates ------------------------------------------------------------

    @app.get("/api/v1/templates")
    def list_templates(user: Stakeholder = Depends(current_user)) -> list[dict[str, Any]]:
        return [t.to_doc() for t in engine.list_templates()]

    @app.post("/api/v1/templates")
    def define_template(body: TemplateBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        try:
            items = [TemplateItem.from_doc(d) for d in body.items]
            relations = [ItemRelation.from_doc(d) for d in body.relations]
        except (KeyError, ValueError) as exc:
            raise ForumError("MALFORMED_TEMPLATE", f"bad item or relation: {exc}")
        kind = _enum(TopicKind, body.topic_kind, "topic_kind")
        return engine.define_template(user, body.name, kind, items, relations).to_doc()

    @app.get("/api/v1/templates/{template_id}")
    def get_template(template_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.get_template(template_id).to_doc()

    @app.get("/api/v1/templates/{template_id}/guidance")
    def guidance(template_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.template_guidance(template_id)

    # -- topics ----------------------------------------------------------------

    @app.post("/api/v1/topics")
    def create_topic(body: TopicBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        kind = _enum(TopicKind, body.kind, "kind")
        topic = engine.create_topic(
            user, kind, body.template_id, body.fields, bypass_dedup=body.bypass_dedup
        )
        return _topic_view(engine, topic, user.role)

    @app.get("/api/v1/topics")
    def list_topics(
        state: str | None = Query(default=None),
        cursor: str | None = Query(default=None),
        limit: int = Query(default=50),
        user: Stakeholder = Depends(current_user),
    ) -> dict[str, Any]:
        topics, next_cursor = engine.list_topics(_states_param(state), cursor, limit)
        return {
            "items": [_topic_view(engine, t, user.role) for t in topics],
            "next_cursor": next_cursor,
        }

    @app.get("/api/v1/topics/{topic_id}")
    def get_topic(topic_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return _topic_view(engine, engine.get_topic(topic_id), user.role)

    @app.get("/api/v1/topics/{topic_id}/aggregate")
    def aggregate(topic_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.aggregate(topic_id)

    @app.get("/api/v1/topics/{topic_id}/transitions")
    def topic_transitions(topic_id: str, user: Stakeholder = Depends(current_user)) -> list[dict[str, Any]]:
        return [r.to_doc() for r in engine.transitions(topic_id)]

    @app.post("/api/v1/topics/{topic_id}/events")
    def apply_event(
        topic_id: str, body: EventBody, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        event = _enum(LifecycleEvent, body.event, "event")
        topic = engine.apply_event(
            user,
            topic_id,
            event,
            expected_version=body.expected_version,
            duplicate_of=body.duplicate_of,
        )
        return _topic_view(engine, topic, user.role)

    @app.post("/api/v1/topics/{topic_id}/relations")
    def link(topic_id: str, body: RelationBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        kind = _enum(RelationKind, body.kind, "kind")
        return engine.link_requirements(user, topic_id, body.target, kind).to_doc()

    @app.get("/api/v1/topics/{topic_id}/relations")
    def relations(topic_id: str, user: Stakeholder = Depends(current_user)) -> list[dict[str, Any]]:
        engine.get_topic(topic_id)
        return [r.to_doc() for r in engine.relations_of(topic_id)]

    # -- posts ------------------------------------------------------------------

    @app.post("/api/v1/topics/{topic_id}/posts")
    def add_post(topic_id: str, body: PostBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.add_post(user, topic_id, body.body).to_doc()

    # -- polls ------------------------------------------------------------------

    @app.post("/api/v1/topics/{topic_id}/polls")
    def open_poll(topic_id: str, body: PollBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        kind = _enum(PollKind, body.kind, "kind")
        return engine.open_poll(user, topic_id, kind, body.options).to_doc()

    @app.post("/api/v1/polls/{poll_id}/votes")
    def vote(poll_id: str, body: VoteBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        poll = engine.cast_vote(user, poll_id, body.option)
        return {"poll_id": poll.id, "option": body.option}

    @app.get("/api/v1/polls/{poll_id}/tally")
    def poll_tally(poll_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, int]:
        return engine.poll_tally(poll_id)

    @app.post("/api/v1/polls/{poll_id}/close")
    def close_poll(poll_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.close_poll(user, poll_id).to_doc()

    # -- questionnaires ------------------------------------------------------------

    @app.post("/api/v1/topics/{topic_id}/questionnaire")
    def define_questionnaire(
        topic_id: str, body: QuestionnaireBody, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        try:
            questions = [
                Question(
                    d["prompt"],
                    _enum(QuestionKind, d["kind"], "question kind"),
                    tuple(d.get("choices", [])),
                )
                for d in body.questions
            ]
        except KeyError as exc:
            raise ForumError("BAD_REQUEST", f"question missing key: {exc}")
        return engine.define_questionnaire(user, topic_id, questions).to_doc()

    @app.post("/api/v1/topics/{topic_id}/responses")
    def submit_response(
        topic_id: str, body: ResponseBody, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        engine.submit_response(user, topic_id, body.answers)
        return {"ok": True}

    @app.get("/api/v1/topics/{topic_id}/summary")
    def summary(topic_id: str, user: Stakeholder = Depends(current_user)) -> list[dict[str, Any]]:
        return engine.questionnaire_summary(topic_id)

    # -- negotiation sessions ---------------------------------------------------------

    @app.post("/api/v1/topics/{topic_id}/sessions")
    def open_session(
        topic_id: str, body: SessionBody, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        return engine.open_session(user, topic_id, body.participants).to_doc()

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        session = engine.get_session(session_id)
        if user.id not in session.participants and user.role is not Role.MANAGEMENT:
            raise ForumError("NOT_PARTICIPANT", f"{user.name!r} is not in this session")
        return session.to_doc()

    @app.post("/api/v1/sessions/{session_id}/messages")
    def post_message(
        session_id: str, body: ChatBody, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        return engine.post_message(user, session_id, body.text).to_doc()

    @app.get("/api/v1/sessions/{session_id}/messages")
    def session_messages(
        session_id: str,
        since: int = Query(default=0),
        user: Stakeholder = Depends(current_user),
    ) -> dict[str, Any]:
        messages = engine.session_messages(user, session_id, since)
        return {"messages": [m.to_doc() for m in messages]}

    @app.post("/api/v1/sessions/{session_id}/close")
    def close_session(
        session_id: str, body: CloseBody, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        outcome = _enum(SessionOutcome, body.outcome, "outcome")
        session, topic = engine.close_session(user, session_id, outcome)
        return {"session": session.to_doc(), "topic": _topic_view(engine, topic, user.role)}

    # -- capability tests ----------------------------------------------------------

    @app.get("/api/v1/tests")
    def list_tests(user: Stakeholder = Depends(current_user)) -> list[dict[str, Any]]:
        return [t.public_doc() for t in engine.list_tests()]

    @app.get("/api/v1/tests/{test_id}")
    def get_test(test_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.get_test(test_id).public_doc()

    @app.post("/api/v1/tests/{test_id}/grade")
    def grade(test_id: str, body: GradeBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        result, updated = engine.grade_capability_test(user, test_id, body.answers)
        return {**result.to_doc(), "user": updated.public_doc()}

    # -- incentives -------------------------------------------------------------------

    @app.post("/api/v1/users/{user_id}/award")
    def award(user_id: str, body: AwardBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.award_score(user, user_id, body.amount, body.reason).public_doc()

    @app.post("/api/v1/topics/{topic_id}/accept/{post_id}")
    def accept_answer(
        topic_id: str, post_id: str, user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        return engine.accept_answer(user, topic_id, post_id).public_doc()

    @app.get("/api/v1/gifts")
    def list_gifts(user: Stakeholder = Depends(current_user)) -> list[dict[str, Any]]:
        return [g.to_doc() for g in engine.list_gifts()]

    @app.post("/api/v1/gifts/{gift_id}/redeem")
    def redeem(gift_id: str, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        updated, gift = engine.redeem(user, gift_id)
        return {"score": updated.score, "stock": gift.stock, "gift": gift.to_doc()}

    # -- direct messages ---------------------------------------------------------------

    @app.post("/api/v1/messages")
    def send_message(body: MessageBody, user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.send_message(user, body.to, body.text)

    @app.get("/api/v1/messages")
    def inbox(
        since: int = Query(default=0), user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        return {"messages": engine.inbox(user, since)}

    # -- export and config ----------------------------------------------------------------

    @app.get("/api/v1/export")
    def export(
        state: str | None = Query(default=None), user: Stakeholder = Depends(current_user)
    ) -> dict[str, Any]:
        return engine.export_requirements(user, _states_param(state))

    @app.get("/api/v1/config")
    def config(user: Stakeholder = Depends(current_user)) -> dict[str, Any]:
        return engine.config.to_doc()

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
