// Mirrors of the /api/v1 JSON payloads. The client derives everything it
// shows from these; business rules live server-side (plus the mirrored
// template validation in validation.ts).

export interface TemplateItemDoc {
  id: string;
  label: string;
  kind: "MANDATORY" | "OPTIONAL";
  hint: string;
  max_length: number;
}

export interface ItemRelationDoc {
  kind: "REQUIRES" | "EXCLUDES";
  a: string;
  b: string;
}

export interface TemplateDoc {
  id: string;
  name: string;
  topic_kind: string;
  items: TemplateItemDoc[];
  relations: ItemRelationDoc[];
}

export interface GuidanceItem {
  id: string;
  label: string;
  kind: "MANDATORY" | "OPTIONAL";
  hint: string;
  max_length: number;
  requires: string[];
  required_when_filled: string[];
  excludes: string[];
}

export interface GuidanceDoc {
  template_id: string;
  name: string;
  topic_kind: string;
  items: GuidanceItem[];
}

export interface Violation {
  code: string;
  item: string;
  other?: string;
  message: string;
}

export interface TopicDoc {
  id: string;
  kind: string;
  template_id: string;
  fields: Record<string, string>;
  author: string;
  state: string;
  version: number;
  created_at: number;
  updated_at: number;
  accepted_post_id: string | null;
  allowed_events: string[];
}

export interface NearestMatch {
  topic_id: string;
  score: number;
}

export interface SegmentDoc {
  body: string;
  at: number;
}

export interface PostDoc {
  id: string;
  topic_id: string;
  author: string;
  segments: SegmentDoc[];
  first_at: number;
}

export interface PollDoc {
  id: string;
  topic_id: string;
  kind: string;
  options: string[];
  state: "OPEN" | "CLOSED";
  ballots: Record<string, string>;
  tally?: Record<string, number>;
}

export interface NegotiationSummary {
  id: string;
  participants: string[];
  state: "OPEN" | "CLOSED";
  outcome: string | null;
  message_count: number;
}

export interface AggregateView {
  topic: Omit<TopicDoc, "allowed_events">;
  state: string;
  posts: PostDoc[];
  polls: PollDoc[];
  questionnaire: QuestionSummary[] | null;
  negotiations: NegotiationSummary[];
}

export interface QuestionSummary {
  prompt: string;
  kind: string;
  counts?: Record<string, number>;
  answers?: string[];
}

export interface SessionDoc {
  id: string;
  topic_id: string;
  participants: string[];
  messages: ChatMessageDoc[];
  state: "OPEN" | "CLOSED";
  outcome: string | null;
}

export interface ChatMessageDoc {
  sequence: number;
  author: string;
  text: string;
  at: number;
}

export interface UserDoc {
  id: string;
  name: string;
  role: "GENERAL" | "MANAGEMENT";
  rights: string[];
  reputation: number;
  capability: string;
  score: number;
}

export interface SessionToken {
  token: string;
  stakeholder_id: string;
  issued_at: number;
  expires_at: number;
}

export interface GiftDoc {
  id: string;
  name: string;
  cost: number;
  stock: number;
}

export interface CapabilityTestDoc {
  id: string;
  name: string;
  questions: { prompt: string; choices: string[] }[];
  pass_threshold: number;
  level_map: [number, string][];
}

export interface GradeResult {
  correct: number;
  passed: boolean;
  level: string;
  user: UserDoc;
}

export interface InboxMessage {
  sequence: number;
  from: string;
  text: string;
  at: number;
}

export interface TopicPage {
  items: TopicDoc[];
  next_cursor: string | null;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
