// SPA bootstrap: hash routing, event delegation, and ChatPoller wiring.
// Holds the session and re-renders whole pages from server responses.

import { ApiClient, ApiFailure } from "./api.js";
import { ChatPoller, renderMessages } from "./chat.js";
import { renderDashboard, renderEventButtons } from "./dashboard.js";
import { escapeAttr, escapeHtml } from "./dom.js";
import {
  renderError,
  renderInbox,
  renderLogin,
  renderNav,
  renderNotice,
  renderShop,
  renderTests,
  renderTopicList,
  renderTopicPage,
} from "./views.js";
import { newWizard, renderWizard, submissionFields, tryValidate } from "./wizard.js";
import type { NearestMatch, TopicDoc, UserDoc } from "./types.js";
import type { WizardState } from "./wizard.js";

const client = new ApiClient();
let me: UserDoc | null = null;
let wizard: WizardState | null = null;
let poller: ChatPoller | null = null;
let topicCache: TopicDoc[] = [];

const main = () => document.getElementById("main")!;
const navSlot = () => document.getElementById("nav")!;
const flash = () => document.getElementById("flash")!;

function setFlash(html: string): void {
  flash().innerHTML = html;
  if (html) setTimeout(() => (flash().innerHTML = ""), 6000);
}

function stopPolling(): void {
  poller?.stop();
  poller = null;
}

async function route(): Promise<void> {
  stopPolling();
  if (!me) {
    navSlot().innerHTML = "";
    main().innerHTML = renderLogin();
    return;
  }
  navSlot().innerHTML = renderNav(me);
  const hash = location.hash || "#/topics";
  const [, page, arg] = hash.split("/");
  try {
    switch (page) {
      case "topics":
        if (arg) await showTopic(arg);
        else await showTopicList();
        break;
      case "new":
        await showWizard();
        break;
      case "dashboard":
        await showDashboard();
        break;
      case "sessions":
        await showSession(arg);
        break;
      case "tests":
        main().innerHTML = renderTests(await client.listTests());
        break;
      case "shop":
        main().innerHTML = renderShop(await client.listGifts(), me);
        break;
      case "inbox":
        main().innerHTML = renderInbox((await client.inbox()).messages);
        break;
      default:
        await showTopicList();
    }
  } catch (err) {
    main().innerHTML = renderError(describe(err));
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiFailure) return `${err.code}: ${err.message}`;
  return String(err);
}

async function showTopicList(cursor?: string): Promise<void> {
  const page = await client.listTopics(undefined, cursor);
  topicCache = cursor ? [...topicCache, ...page.items] : page.items;
  main().innerHTML = renderTopicList(topicCache, page.next_cursor);
}

async function showTopic(topicId: string): Promise<void> {
  const [view, topic] = await Promise.all([client.aggregate(topicId), client.getTopic(topicId)]);
  main().innerHTML = renderTopicPage(view, me!, renderEventButtons(topic));
}

async function showDashboard(): Promise<void> {
  const page = await client.listTopics();
  main().innerHTML = `<h2>Analyst dashboard</h2>` + renderDashboard(page.items);
}

async function showWizard(): Promise<void> {
  const templates = await client.listTemplates();
  const opinion = templates.find((t) => t.topic_kind === "OPINION") ?? templates[0];
  const guidance = await client.guidance(opinion.id);
  wizard = newWizard(opinion, guidance);
  main().innerHTML = renderWizard(wizard);
}

async function showSession(sessionId: string): Promise<void> {
  const session = await client.getSession(sessionId);
  const closed = session.state === "CLOSED";
  main().innerHTML = `
    <h2>Negotiation ${escapeHtml(sessionId)}</h2>
    <p class="meta">participants: ${session.participants.map(escapeHtml).join(", ")}
      ${closed ? ` · closed (${escapeHtml(session.outcome ?? "?")})` : ""}</p>
    <div id="chat-log" class="chat-log">${renderMessages(session.messages)}</div>
    ${
      closed
        ? "<p class='meta'>This transcript is read-only.</p>"
        : `<form data-form="chat" data-session="${escapeAttr(sessionId)}">
             <input name="text" placeholder="message" autocomplete="off">
             <button type="submit">Send</button>
           </form>`
    }
    ${
      !closed && me!.role === "MANAGEMENT"
        ? `<div class="close-controls">
             ${["CONSISTENT", "INCONSISTENT_CANCEL", "INCONSISTENT_REOPEN"]
               .map(
                 (outcome) =>
                   `<button data-action="close-session" data-session="${escapeAttr(sessionId)}" data-outcome="${outcome}">Close: ${outcome.toLowerCase().replace(/_/g, " ")}</button>`,
               )
               .join(" ")}
           </div>`
        : ""
    }`;
  if (!closed) {
    poller = new ChatPoller(
      { fetchSince: (id, since) => client.sessionMessages(id, since).then((r) => r.messages) },
      sessionId,
      (messages) => {
        const log = document.getElementById("chat-log");
        if (log) {
          log.innerHTML = renderMessages(messages);
          log.scrollTop = log.scrollHeight;
        }
      },
    );
    poller.start();
  }
}

async function handleAction(target: HTMLElement): Promise<void> {
  const action = target.dataset["action"];
  switch (action) {
    case "logout":
      me = null;
      client.token = null;
      location.hash = "#/";
      await route();
      break;
    case "more-topics":
      await showTopicList(target.dataset["cursor"]);
      break;
    case "apply-event": {
      try {
        const updated = await client.applyEvent(
          target.dataset["topic"]!,
          target.dataset["event"]!,
          Number(target.dataset["version"]),
        );
        setFlash(renderNotice(`Topic is now ${updated.state}`));
      } catch (err) {
        if (err instanceof ApiFailure && err.code === "STALE_VERSION") {
          setFlash(renderError("The topic changed under you; controls refreshed, try again."));
        } else {
          throw err;
        }
      }
      await route();
      break;
    }
    case "vote":
      await client.vote(target.dataset["poll"]!, target.dataset["option"]!);
      await route();
      break;
    case "open-priority-poll":
      await client.openPoll(target.dataset["topic"]!, "PRIORITY");
      await route();
      break;
    case "accept-answer":
      await client.accept(target.dataset["topic"]!, target.dataset["post"]!);
      setFlash(renderNotice("Answer accepted; the bounty has been paid."));
      await route();
      break;
    case "redeem": {
      const result = await client.redeem(target.dataset["gift"]!);
      me = await client.me();
      setFlash(renderNotice(`Redeemed! ${result.stock} left; your score is now ${result.score}.`));
      await route();
      break;
    }
    case "close-session": {
      const closed = await client.closeSession(
        target.dataset["session"]!,
        target.dataset["outcome"]!,
      );
      setFlash(renderNotice(`Session closed; topic is now ${closed.topic.state}.`));
      location.hash = `#/topics/${closed.topic.id}`;
      break;
    }
  }
}

async function handleForm(form: HTMLFormElement): Promise<void> {
  const kind = form.dataset["form"];
  const data = new FormData(form);
  switch (kind) {
    case "login": {
      try {
        await client.login(String(data.get("handle")), String(data.get("secret")));
        me = await client.me();
        location.hash = "#/topics";
        await route();
      } catch (err) {
        main().innerHTML = renderLogin(describe(err));
      }
      break;
    }
    case "wizard": {
      if (!wizard) return;
      wizard.values = {};
      for (const input of form.querySelectorAll<HTMLInputElement>("[data-wizard-input]")) {
        wizard.values[input.name] = input.value;
      }
      wizard.nearest = null;
      if (!tryValidate(wizard)) {
        // blocked client-side: no request leaves the browser
        main().innerHTML = renderWizard(wizard);
        return;
      }
      try {
        const topic = await client.createTopic(
          wizard.template.topic_kind,
          wizard.template.id,
          submissionFields(wizard),
        );
        setFlash(renderNotice("Topic submitted."));
        location.hash = `#/topics/${topic.id}`;
      } catch (err) {
        if (err instanceof ApiFailure && err.code === "DUPLICATE") {
          wizard.nearest = err.nearest() as NearestMatch[];
          main().innerHTML = renderWizard(wizard);
        } else {
          setFlash(renderError(describe(err)));
        }
      }
      break;
    }
    case "post": {
      await client.addPost(form.dataset["topic"]!, String(data.get("body")));
      await route();
      break;
    }
    case "chat": {
      const text = String(data.get("text")).trim();
      if (!text) return;
      await client.postMessage(form.dataset["session"]!, text);
      form.reset();
      await poller?.tick();
      break;
    }
    case "open-session": {
      const participants = String(data.get("participants"))
        .split(",")
        .map((p) => p.trim())
        .filter(Boolean);
      const session = await client.openSession(form.dataset["topic"]!, participants);
      location.hash = `#/sessions/${session.id}`;
      break;
    }
    case "grade-test": {
      const count = Number(form.dataset["count"]);
      const answers: number[] = [];
      for (let i = 0; i < count; i++) answers.push(Number(data.get(`q${i}`) ?? -1));
      const result = await client.gradeTest(form.dataset["test"]!, answers);
      me = result.user;
      setFlash(
        renderNotice(
          `Scored ${result.correct}/${count}; ${result.passed ? "passed" : "not passed"}; ` +
            `capability ${result.user.capability}.`,
        ),
      );
      await route();
      break;
    }
    case "send-message": {
      await client.sendMessage(String(data.get("to")), String(data.get("text")));
      setFlash(renderNotice("Sent."));
      form.reset();
      break;
    }
  }
}

export function boot(): void {
  document.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    event.preventDefault();
    void handleAction(target).catch((err) => setFlash(renderError(describe(err))));
  });
  document.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement;
    if (!form.dataset["form"]) return;
    event.preventDefault();
    void handleForm(form).catch((err) => setFlash(renderError(describe(err))));
  });
  window.addEventListener("hashchange", () => void route());
  void route();
}

boot();
