// Page renderers for everything outside the wizard/dashboard/chat modules.
// All return HTML strings; app.ts owns mounting and event delegation.

import { escapeAttr, escapeHtml, formatTime } from "./dom.js";
import { renderStateBadge } from "./dashboard.js";
import type {
  AggregateView,
  CapabilityTestDoc,
  GiftDoc,
  InboxMessage,
  PollDoc,
  QuestionSummary,
  TopicDoc,
  UserDoc,
} from "./types.js";

export function renderLogin(error?: string): string {
  return `
    <form data-form="login" class="login">
      <h2>Sign in</h2>
      ${error ? `<p class="error">${escapeHtml(error)}</p>` : ""}
      <label>Handle <input name="handle" autocomplete="username"></label>
      <label>Secret <input name="secret" type="password" autocomplete="current-password"></label>
      <button type="submit">Log in</button>
    </form>`;
}

export function renderNav(me: UserDoc): string {
  const links = [
    ["#/topics", "Topics"],
    ["#/new", "New topic"],
    ["#/tests", "Capability tests"],
    ["#/shop", "Gift shop"],
    ["#/inbox", "Inbox"],
  ];
  if (me.role === "MANAGEMENT") links.splice(1, 0, ["#/dashboard", "Dashboard"]);
  return `
    <nav>
      ${links.map(([href, label]) => `<a href="${href}">${label}</a>`).join("")}
      <span class="who">${escapeHtml(me.name)} · ${escapeHtml(me.capability)} ·
        score ${me.score} · rep ${me.reputation}</span>
      <button data-action="logout">Log out</button>
    </nav>`;
}

export function renderTopicList(topics: TopicDoc[], nextCursor: string | null): string {
  const rows = topics.map((topic) => {
    const title = topic.fields["title"] ?? topic.id;
    return `
      <li>
        <a href="#/topics/${escapeAttr(topic.id)}">${escapeHtml(title)}</a>
        ${renderStateBadge(topic.state)}
        <span class="meta">${escapeHtml(topic.kind)} · ${formatTime(topic.created_at)}</span>
      </li>`;
  });
  return `
    <h2>Topics</h2>
    <ul class="topic-list">${rows.join("") || "<li class='empty'>Nothing here yet.</li>"}</ul>
    ${nextCursor ? `<button data-action="more-topics" data-cursor="${escapeAttr(nextCursor)}">Load more</button>` : ""}`;
}

function renderPoll(poll: PollDoc): string {
  const tally = poll.tally ?? {};
  const rows = poll.options
    .map(
      (option) => `
      <li>
        <span>${escapeHtml(option)}</span>
        <span class="count">${tally[option] ?? 0}</span>
        ${
          poll.state === "OPEN"
            ? `<button data-action="vote" data-poll="${escapeAttr(poll.id)}" data-option="${escapeAttr(option)}">Vote</button>`
            : ""
        }
      </li>`,
    )
    .join("");
  return `
    <div class="poll">
      <h4>${escapeHtml(poll.kind)} poll <span class="meta">(${poll.state.toLowerCase()})</span></h4>
      <ul>${rows}</ul>
    </div>`;
}

function renderQuestionnaire(summary: QuestionSummary[]): string {
  const blocks = summary.map((question) => {
    if (question.answers) {
      return `
        <div class="question">
          <h4>${escapeHtml(question.prompt)}</h4>
          <ul>${question.answers.map((a) => `<li>${escapeHtml(a)}</li>`).join("")}</ul>
        </div>`;
    }
    const counts = Object.entries(question.counts ?? {})
      .map(([choice, n]) => `<li>${escapeHtml(choice)}: ${n}</li>`)
      .join("");
    return `<div class="question"><h4>${escapeHtml(question.prompt)}</h4><ul>${counts}</ul></div>`;
  });
  return `<section class="questionnaire"><h3>Questionnaire</h3>${blocks.join("")}</section>`;
}

export function renderTopicPage(view: AggregateView, me: UserDoc, eventButtonsHtml: string): string {
  const topic = view.topic;
  const fields = Object.entries(topic.fields)
    .map(
      ([key, value]) =>
        `<dt>${escapeHtml(key)}</dt><dd>${escapeHtml(value)}</dd>`,
    )
    .join("");
  const posts = view.posts
    .map(
      (post) => `
      <div class="post" data-post="${escapeAttr(post.id)}">
        <span class="author">${escapeHtml(post.author)}</span>
        ${post.segments
          .map(
            (segment) =>
              `<p class="segment">${escapeHtml(segment.body)} <span class="time">${formatTime(segment.at)}</span></p>`,
          )
          .join("")}
        ${
          topic.kind === "REWARD" && me.role === "MANAGEMENT" && !topic.accepted_post_id
            ? `<button data-action="accept-answer" data-topic="${escapeAttr(topic.id)}" data-post="${escapeAttr(post.id)}">Accept answer</button>`
            : ""
        }
        ${topic.accepted_post_id === post.id ? `<span class="badge badge-locked">accepted</span>` : ""}
      </div>`,
    )
    .join("");
  const negotiations = view.negotiations
    .map(
      (session) => `
      <li>
        <a href="#/sessions/${escapeAttr(session.id)}">Session ${escapeHtml(session.id)}</a>
        ${session.state === "CLOSED" ? `closed: ${escapeHtml(session.outcome ?? "?")}` : "open"}
        · ${session.message_count} messages
      </li>`,
    )
    .join("");
  const canPost = view.state === "SUGGESTION_COLLECTED";
  return `
    <article class="topic">
      <h2>${escapeHtml(topic.fields["title"] ?? topic.id)} ${renderStateBadge(view.state)}</h2>
      <div class="actions">${eventButtonsHtml}</div>
      <dl class="fields">${fields}</dl>
      <section class="posts">
        <h3>Posts</h3>
        ${posts || "<p class='empty'>No posts yet.</p>"}
        ${
          canPost
            ? `<form data-form="post" data-topic="${escapeAttr(topic.id)}">
                 <textarea name="body" rows="3" placeholder="Add your suggestion"></textarea>
                 <button type="submit">Post</button>
               </form>`
            : "<p class='meta'>Posting is closed in this state.</p>"
        }
      </section>
      ${view.polls.map(renderPoll).join("")}
      ${
        me.role === "MANAGEMENT" && ["SUGGESTION_COLLECTED", "NEGOTIATION"].includes(view.state)
          ? `<button data-action="open-priority-poll" data-topic="${escapeAttr(topic.id)}">Open priority poll</button>`
          : ""
      }
      ${
        me.role === "MANAGEMENT" && view.state === "NEGOTIATION"
          ? `<form data-form="open-session" data-topic="${escapeAttr(topic.id)}">
               <input name="participants" placeholder="participant ids, comma separated">
               <button type="submit">Open negotiation session</button>
             </form>`
          : ""
      }
      ${view.questionnaire ? renderQuestionnaire(view.questionnaire) : ""}
      <section class="negotiations">
        <h3>Negotiations</h3>
        <ul>${negotiations || "<li class='empty'>None.</li>"}</ul>
      </section>
    </article>`;
}

export function renderTests(tests: CapabilityTestDoc[]): string {
  const blocks = tests.map((test) => {
    const questions = test.questions
      .map(
        (question, i) => `
        <fieldset>
          <legend>${i + 1}. ${escapeHtml(question.prompt)}</legend>
          ${question.choices
            .map(
              (choice, j) =>
                `<label><input type="radio" name="q${i}" value="${j}"> ${escapeHtml(choice)}</label>`,
            )
            .join("")}
        </fieldset>`,
      )
      .join("");
    return `
      <form data-form="grade-test" data-test="${escapeAttr(test.id)}" data-count="${test.questions.length}">
        <h3>${escapeHtml(test.name)}</h3>
        <p class="meta">pass at ${test.pass_threshold}/${test.questions.length} correct</p>
        ${questions}
        <button type="submit">Submit answers</button>
      </form>`;
  });
  return `<h2>Capability tests</h2>${blocks.join("") || "<p class='empty'>No tests configured.</p>"}`;
}

export function renderShop(gifts: GiftDoc[], me: UserDoc): string {
  const rows = gifts.map(
    (gift) => `
    <li>
      <span>${escapeHtml(gift.name)}</span>
      <span class="meta">${gift.cost} points · ${gift.stock} left</span>
      <button data-action="redeem" data-gift="${escapeAttr(gift.id)}"
        ${gift.stock < 1 || me.score < gift.cost ? "disabled" : ""}>Redeem</button>
    </li>`,
  );
  return `
    <h2>Gift shop</h2>
    <p class="meta">Your score: ${me.score}</p>
    <ul class="shop">${rows.join("") || "<li class='empty'>Nothing to redeem.</li>"}</ul>`;
}

export function renderInbox(messages: InboxMessage[]): string {
  const rows = messages.map(
    (message) => `
    <li>
      <span class="author">${escapeHtml(message.from)}</span>
      <span class="time">${formatTime(message.at)}</span>
      <p>${escapeHtml(message.text)}</p>
    </li>`,
  );
  return `
    <h2>Inbox</h2>
    <ul class="inbox">${rows.join("") || "<li class='empty'>No messages.</li>"}</ul>
    <form data-form="send-message">
      <input name="to" placeholder="recipient id">
      <input name="text" placeholder="message">
      <button type="submit">Send</button>
    </form>`;
}

export function renderError(message: string): string {
  return `<p class="error banner">${escapeHtml(message)}</p>`;
}

export function renderNotice(message: string): string {
  return `<p class="notice banner">${escapeHtml(message)}</p>`;
}
