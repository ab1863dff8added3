// Thin typed client for /api/v1. Every non-2xx response carries the
// structured {code, message, details} body, surfaced as ApiFailure.

import type {
  AggregateView,
  ApiErrorBody,
  CapabilityTestDoc,
  ChatMessageDoc,
  GiftDoc,
  GradeResult,
  GuidanceDoc,
  InboxMessage,
  NearestMatch,
  PollDoc,
  SessionDoc,
  SessionToken,
  TemplateDoc,
  TopicDoc,
  TopicPage,
  UserDoc,
} from "./types.js";

export class ApiFailure extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.details = body.details ?? {};
  }

  nearest(): NearestMatch[] {
    return (this.details["nearest"] as NearestMatch[] | undefined) ?? [];
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(private readonly base: string = "/api/v1") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({
      code: "BAD_RESPONSE",
      message: `non-JSON response (${response.status})`,
      details: {},
    }));
    if (!response.ok) throw new ApiFailure(response.status, payload as ApiErrorBody);
    return payload as T;
  }

  async login(handle: string, secret: string): Promise<SessionToken> {
    const session = await this.request<SessionToken>("POST", "/auth/login", { handle, secret });
    this.token = session.token;
    return session;
  }

  me(): Promise<UserDoc> {
    return this.request("GET", "/users/me");
  }

  listTemplates(): Promise<TemplateDoc[]> {
    return this.request("GET", "/templates");
  }

  getTemplate(id: string): Promise<TemplateDoc> {
    return this.request("GET", `/templates/${id}`);
  }

  guidance(id: string): Promise<GuidanceDoc> {
    return this.request("GET", `/templates/${id}/guidance`);
  }

  createTopic(kind: string, templateId: string, fields: Record<string, string>): Promise<TopicDoc> {
    return this.request("POST", "/topics", { kind, template_id: templateId, fields });
  }

  listTopics(state?: string, cursor?: string): Promise<TopicPage> {
    const params = new URLSearchParams();
    if (state) params.set("state", state);
    if (cursor) params.set("cursor", cursor);
    const qs = params.toString();
    return this.request("GET", `/topics${qs ? "?" + qs : ""}`);
  }

  getTopic(id: string): Promise<TopicDoc> {
    return this.request("GET", `/topics/${id}`);
  }

  aggregate(id: string): Promise<AggregateView> {
    return this.request("GET", `/topics/${id}/aggregate`);
  }

  applyEvent(topicId: string, event: string, expectedVersion?: number): Promise<TopicDoc> {
    return this.request("POST", `/topics/${topicId}/events`, {
      event,
      expected_version: expectedVersion ?? null,
    });
  }

  addPost(topicId: string, body: string): Promise<unknown> {
    return this.request("POST", `/topics/${topicId}/posts`, { body });
  }

  openPoll(topicId: string, kind: string, options?: string[]): Promise<PollDoc> {
    return this.request("POST", `/topics/${topicId}/polls`, { kind, options: options ?? null });
  }

  vote(pollId: string, option: string): Promise<unknown> {
    return this.request("POST", `/polls/${pollId}/votes`, { option });
  }

  tally(pollId: string): Promise<Record<string, number>> {
    return this.request("GET", `/polls/${pollId}/tally`);
  }

  closePoll(pollId: string): Promise<PollDoc> {
    return this.request("POST", `/polls/${pollId}/close`);
  }

  submitResponse(topicId: string, answers: string[][]): Promise<unknown> {
    return this.request("POST", `/topics/${topicId}/responses`, { answers });
  }

  openSession(topicId: string, participants: string[]): Promise<SessionDoc> {
    return this.request("POST", `/topics/${topicId}/sessions`, { participants });
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.request("GET", `/sessions/${id}`);
  }

  sessionMessages(id: string, since: number): Promise<{ messages: ChatMessageDoc[] }> {
    return this.request("GET", `/sessions/${id}/messages?since=${since}`);
  }

  postMessage(id: string, text: string): Promise<ChatMessageDoc> {
    return this.request("POST", `/sessions/${id}/messages`, { text });
  }

  closeSession(id: string, outcome: string): Promise<{ session: SessionDoc; topic: TopicDoc }> {
    return this.request("POST", `/sessions/${id}/close`, { outcome });
  }

  listTests(): Promise<CapabilityTestDoc[]> {
    return this.request("GET", "/tests");
  }

  gradeTest(id: string, answers: number[]): Promise<GradeResult> {
    return this.request("POST", `/tests/${id}/grade`, { answers });
  }

  accept(topicId: string, postId: string): Promise<UserDoc> {
    return this.request("POST", `/topics/${topicId}/accept/${postId}`);
  }

  listGifts(): Promise<GiftDoc[]> {
    return this.request("GET", "/gifts");
  }

  redeem(giftId: string): Promise<{ score: number; stock: number; gift: GiftDoc }> {
    return this.request("POST", `/gifts/${giftId}/redeem`);
  }

  sendMessage(to: string, text: string): Promise<InboxMessage> {
    return this.request("POST", "/messages", { to, text });
  }

  inbox(since = 0): Promise<{ messages: InboxMessage[] }> {
    return this.request("GET", `/messages?since=${since}`);
  }
}
