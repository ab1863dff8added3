// Chat polling contract: a message posted by one client appears in another
// client's transcript within two poll intervals, and the rendered sequence
// stays gapless and ordered no matter how fetches interleave.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { ChatPoller, DEFAULT_POLL_INTERVAL_MS, renderMessages } from "../src/chat.js";
import type { ChatMessageDoc, ChatTransport } from "../src/chat.js";

class FakeServer implements ChatTransport {
  private log: ChatMessageDoc[] = [];

  post(author: string, text: string): void {
    this.log.push({ sequence: this.log.length + 1, author, text, at: this.log.length });
  }

  async fetchSince(_sessionId: string, since: number): Promise<ChatMessageDoc[]> {
    return this.log.filter((m) => m.sequence > since);
  }
}

describe("ChatPoller", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("delivers a cross-client message within two poll intervals", async () => {
    const server = new FakeServer();
    const seenByB: ChatMessageDoc[][] = [];
    const pollerA = new ChatPoller(server, "ses-1", () => {}, DEFAULT_POLL_INTERVAL_MS);
    const pollerB = new ChatPoller(
      server, "ses-1", (messages) => seenByB.push([...messages]), DEFAULT_POLL_INTERVAL_MS,
    );
    pollerA.start();
    pollerB.start();
    await vi.advanceTimersByTimeAsync(10);

    server.post("usr-a", "hello from the other browser");
    await vi.advanceTimersByTimeAsync(2 * DEFAULT_POLL_INTERVAL_MS);

    expect(pollerB.messages.map((m) => m.text)).toContain("hello from the other browser");
    expect(seenByB.length).toBeGreaterThan(0);
    pollerA.stop();
    pollerB.stop();
  });

  it("keeps sequences gapless and ordered across many rounds", async () => {
    const server = new FakeServer();
    const poller = new ChatPoller(server, "ses-1", () => {}, DEFAULT_POLL_INTERVAL_MS);
    poller.start();
    for (let i = 0; i < 10; i++) {
      server.post(i % 2 ? "usr-a" : "usr-b", `message ${i}`);
      if (i % 3 === 0) await poller.tick(); // manual refresh racing the interval
      await vi.advanceTimersByTimeAsync(DEFAULT_POLL_INTERVAL_MS);
    }
    const sequences = poller.messages.map((m) => m.sequence);
    expect(sequences).toEqual([...Array(10).keys()].map((i) => i + 1));
    expect(poller.lastSeen()).toBe(10);
    poller.stop();
  });

  it("never duplicates messages when the server over-returns", async () => {
    const sloppy: ChatTransport = {
      // ignores the cursor entirely; client-side dedup must cope
      fetchSince: async () => [
        { sequence: 1, author: "a", text: "one", at: 1 },
        { sequence: 2, author: "b", text: "two", at: 2 },
      ],
    };
    const poller = new ChatPoller(sloppy, "ses-1", () => {}, DEFAULT_POLL_INTERVAL_MS);
    await poller.tick();
    await poller.tick();
    expect(poller.messages.map((m) => m.sequence)).toEqual([1, 2]);
  });

  it("renders transcripts with escaping and sequence markers", () => {
    const html = renderMessages([
      { sequence: 1, author: "usr-a", text: "<script>alert(1)</script>", at: 1 },
    ]);
    expect(html).toContain('data-sequence="1"');
    expect(html).toContain("&lt;script&gt;");
    expect(html).not.toContain("<script>alert");
    expect(renderMessages([])).toContain("No messages yet");
  });
});
