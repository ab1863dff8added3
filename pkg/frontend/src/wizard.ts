// Templated submission wizard: renders items in template order with
// mandatory markers and relation hints, blocks submission client-side on
// violations, and shows the server's nearest-match panel on a duplicate.

import { escapeAttr, escapeHtml } from "./dom.js";
import { validateSubmission, violationsByItem } from "./validation.js";
import type { GuidanceDoc, GuidanceItem, NearestMatch, TemplateDoc, Violation } from "./types.js";

export interface WizardState {
  template: TemplateDoc;
  guidance: GuidanceDoc;
  values: Record<string, string>;
  violations: Violation[];
  nearest: NearestMatch[] | null; // server duplicate feedback, when rejected
}

export function newWizard(template: TemplateDoc, guidance: GuidanceDoc): WizardState {
  return { template, guidance, values: {}, violations: [], nearest: null };
}

/** Collect non-empty inputs; blank optionals stay out of the submission. */
export function submissionFields(state: WizardState): Record<string, string> {
  const fields: Record<string, string> = {};
  for (const item of state.template.items) {
    const value = state.values[item.id];
    if (value !== undefined && value !== "") fields[item.id] = value;
  }
  return fields;
}

/** Validate locally; returns true when the submission may go to the server. */
export function tryValidate(state: WizardState): boolean {
  state.violations = validateSubmission(submissionFields(state), state.template);
  return state.violations.length === 0;
}

function relationHints(item: GuidanceItem): string[] {
  const hints: string[] = [];
  for (const other of item.requires) hints.push(`filling this also requires '${other}'`);
  for (const other of item.required_when_filled) hints.push(`required when '${other}' is filled`);
  for (const other of item.excludes) hints.push(`leave empty if '${other}' is filled`);
  return hints;
}

export function renderWizard(state: WizardState): string {
  const grouped = violationsByItem(state.violations);
  const rows = state.guidance.items.map((item) => {
    const value = state.values[item.id] ?? "";
    const errors = grouped.get(item.id) ?? [];
    const hints = [item.hint, ...relationHints(item)].filter(Boolean);
    const long = item.max_length > 200;
    const input = long
      ? `<textarea name="${escapeAttr(item.id)}" data-wizard-input rows="4">${escapeHtml(value)}</textarea>`
      : `<input name="${escapeAttr(item.id)}" data-wizard-input value="${escapeAttr(value)}">`;
    return `
      <div class="wizard-item ${errors.length ? "has-error" : ""}" data-item="${escapeAttr(item.id)}">
        <label>
          ${escapeHtml(item.label)}
          ${item.kind === "MANDATORY" ? '<span class="mandatory" title="mandatory">*</span>' : ""}
          <span class="limit">${item.max_length} chars max</span>
        </label>
        ${hints.map((h) => `<p class="hint">${escapeHtml(h)}</p>`).join("")}
        ${input}
        ${errors.map((e) => `<p class="error" data-code="${escapeAttr(e.code)}">${escapeHtml(e.message)}</p>`).join("")}
      </div>`;
  });
  const blocking = state.violations.filter((v) => !grouped.has(v.item));
  return `
    <form data-form="wizard" class="wizard" novalidate>
      <h2>${escapeHtml(state.guidance.name)}</h2>
      ${rows.join("")}
      ${blocking.map((v) => `<p class="error">${escapeHtml(v.message)}</p>`).join("")}
      ${state.nearest ? renderDuplicatePanel(state.nearest) : ""}
      <button type="submit">Submit topic</button>
    </form>`;
}

/** The "similar topics" panel shown when the server rejects a duplicate. */
export function renderDuplicatePanel(nearest: NearestMatch[]): string {
  const rows = nearest
    .map(
      (match) => `
      <li>
        <a href="#/topics/${escapeAttr(match.topic_id)}">${escapeHtml(match.topic_id)}</a>
        <span class="score">similarity ${match.score.toFixed(2)}</span>
      </li>`,
    )
    .join("");
  return `
    <div class="duplicate-panel" data-panel="duplicates">
      <h3>Too similar to existing topics</h3>
      <p>Review these before resubmitting: your text matched them too closely.</p>
      <ul>${rows}</ul>
    </div>`;
}
