// Negotiation chat polling: each client keeps the sequence of the last
// message it has seen and asks only for what came after. Appends keep the
// rendered transcript strictly ordered and gapless even if a poll overlaps
// a manual refresh.

import { escapeHtml, formatTime } from "./dom.js";
import type { ChatMessageDoc } from "./types.js";

export interface ChatTransport {
  fetchSince(sessionId: string, since: number): Promise<ChatMessageDoc[]>;
}

export const DEFAULT_POLL_INTERVAL_MS = 2000;

export class ChatPoller {
  readonly messages: ChatMessageDoc[] = [];
  private cursor = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private readonly transport: ChatTransport,
    private readonly sessionId: string,
    private readonly onUpdate: (messages: ChatMessageDoc[]) => void = () => {},
    private readonly intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
  ) {}

  start(): void {
    if (this.timer) return;
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
    void this.tick();
  }

  stop(): void {
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
  }

  /** One poll round; safe to call concurrently with the interval. */
  async tick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const incoming = await this.transport.fetchSince(this.sessionId, this.cursor);
      let changed = false;
      for (const message of incoming) {
        // drop anything already seen; servers return > cursor, but a manual
        // tick racing the interval must not duplicate or reorder
        if (message.sequence <= this.cursor) continue;
        this.messages.push(message);
        this.cursor = message.sequence;
        changed = true;
      }
      if (changed) this.onUpdate(this.messages);
    } finally {
      this.inFlight = false;
    }
  }

  lastSeen(): number {
    return this.cursor;
  }
}

export function renderMessages(
  messages: ChatMessageDoc[],
  names: Record<string, string> = {},
): string {
  if (!messages.length) return `<p class="empty">No messages yet.</p>`;
  return messages
    .map(
      (message) => `
      <div class="chat-message" data-sequence="${message.sequence}">
        <span class="author">${escapeHtml(names[message.author] ?? message.author)}</span>
        <span class="time">${formatTime(message.at)}</span>
        <p>${escapeHtml(message.text)}</p>
      </div>`,
    )
    .join("");
}
