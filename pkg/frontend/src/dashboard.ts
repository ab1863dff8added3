// Analyst dashboard: per-topic state badges and exactly the action buttons
// the server reports as legal (the topic's allowed_events for the caller).

import { escapeAttr, escapeHtml, formatTime } from "./dom.js";
import type { TopicDoc } from "./types.js";

export const EVENT_LABELS: Record<string, string> = {
  OPEN_FOR_SUGGESTIONS: "Open for suggestions",
  START_NEGOTIATION: "Start negotiation",
  LOCK_CONSISTENT: "Lock (consistent)",
  CANCEL_FROM_NEGOTIATION: "Cancel (no agreement)",
  UNLOCK: "Unlock",
  RENEGOTIATE: "Renegotiate",
  LOCK_DIRECT: "Lock directly",
  REOPEN_SUGGESTIONS: "Reopen suggestions",
  CANCEL_DUPLICATE: "Cancel as duplicate",
  CANCEL_LOW_EVALUATION: "Cancel (low evaluation)",
};

export interface EventButton {
  event: string;
  label: string;
}

/** Buttons for a topic, straight from the server's allowed_events. */
export function eventButtons(topic: Pick<TopicDoc, "allowed_events">): EventButton[] {
  return (topic.allowed_events ?? []).map((event) => ({
    event,
    label: EVENT_LABELS[event] ?? event,
  }));
}

export function renderStateBadge(state: string): string {
  return `<span class="badge badge-${escapeAttr(state.toLowerCase())}">${escapeHtml(
    state.replace(/_/g, " "),
  )}</span>`;
}

export function renderEventButtons(topic: TopicDoc): string {
  return eventButtons(topic)
    .map(
      (button) =>
        `<button data-action="apply-event" data-topic="${escapeAttr(topic.id)}" ` +
        `data-event="${escapeAttr(button.event)}" data-version="${topic.version}">` +
        `${escapeHtml(button.label)}</button>`,
    )
    .join(" ");
}

export function renderDashboardRow(topic: TopicDoc): string {
  const title = topic.fields["title"] ?? topic.id;
  return `
    <tr data-topic-row="${escapeAttr(topic.id)}">
      <td><a href="#/topics/${escapeAttr(topic.id)}">${escapeHtml(title)}</a></td>
      <td>${renderStateBadge(topic.state)}</td>
      <td>${escapeHtml(topic.kind)}</td>
      <td>${formatTime(topic.updated_at)}</td>
      <td class="actions">${renderEventButtons(topic)}</td>
    </tr>`;
}

export function renderDashboard(topics: TopicDoc[]): string {
  if (!topics.length) {
    return `<p class="empty">No topics yet.</p>`;
  }
  return `
    <table class="dashboard">
      <thead>
        <tr><th>Topic</th><th>State</th><th>Kind</th><th>Updated</th><th>Actions</th></tr>
      </thead>
      <tbody>${topics.map(renderDashboardRow).join("")}</tbody>
    </table>`;
}
