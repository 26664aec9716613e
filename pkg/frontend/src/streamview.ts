import type { ApiClient } from "./api.js";
import { buildControl } from "./cards.js";
import { StreamFlow } from "./stream.js";
import type { EiCard } from "./types.js";

// One card at a time: short question, one control, submit, next card.
// The stop link is always visible; an empty stream suggests browsing.

export interface StreamViewHooks {
  onStop?: () => void;
  onAnswered?: (count: number) => void;
}

function targetLinks(card: EiCard): HTMLElement {
  const wrap = document.createElement("p");
  wrap.className = "card-targets";
  wrap.appendChild(document.createTextNode("Discuss: "));
  card.targets.forEach((target, index) => {
    if (index > 0) wrap.appendChild(document.createTextNode(", "));
    const link = document.createElement("a");
    link.href = `#/discussion/${target}`;
    link.textContent = target;
    wrap.appendChild(link);
  });
  return wrap;
}

export function renderStreamView(
  api: ApiClient,
  flow: StreamFlow,
  container: HTMLElement,
  hooks: StreamViewHooks = {},
): { showCurrent: () => Promise<void> } {
  async function showCurrent(): Promise<void> {
    container.textContent = "";
    let card: EiCard | null;
    try {
      card = await flow.next();
    } catch {
      const failed = document.createElement("p");
      failed.className = "error-note";
      failed.textContent = "Could not load the next question.";
      const retry = document.createElement("button");
      retry.type = "button";
      retry.textContent = "Retry";
      retry.addEventListener("click", () => void showCurrent());
      container.append(failed, retry);
      return;
    }
    if (card === null) {
      const idle = document.createElement("p");
      idle.className = "idle-note";
      idle.textContent = "Nothing to answer right now. Browse the tree instead?";
      const browse = document.createElement("a");
      browse.href = "#/tree";
      browse.textContent = "Open the tree";
      container.append(idle, browse);
      return;
    }
    const cardBox = document.createElement("section");
    cardBox.className = "card";
    cardBox.dataset.eiId = card.eiId;
    cardBox.dataset.type = card.type;
    const question = document.createElement("h3");
    question.className = "question";
    question.textContent = card.questionText;
    cardBox.appendChild(question);
    const control = buildControl(card);
    cardBox.appendChild(control.root);
    const feedback = document.createElement("p");
    feedback.className = "feedback";
    const submit = document.createElement("button");
    submit.type = "button";
    submit.className = "submit";
    submit.textContent = "Submit";
    submit.disabled = control.getPayload() === null;
    control.root.addEventListener("click", () => {
      submit.disabled = control.getPayload() === null;
    });
    control.root.addEventListener("input", () => {
      submit.disabled = control.getPayload() === null;
    });
    submit.addEventListener("click", async () => {
      const payload = control.getPayload();
      if (payload === null) return;
      const result = await flow.submitCurrent(payload);
      if (result.ok || result.status === 409) {
        hooks.onAnswered?.(flow.answeredCount);
        await showCurrent(); // optimistic advance: next card immediately
      } else {
        feedback.textContent = result.error ?? "Invalid answer.";
      }
    });
    const stop = document.createElement("a");
    stop.className = "stop-link";
    stop.href = "#/stats";
    stop.textContent = "Stop for now";
    stop.addEventListener("click", () => hooks.onStop?.());
    cardBox.append(feedback, submit, targetLinks(card), stop);
    container.appendChild(cardBox);
  }
  return { showCurrent };
}
