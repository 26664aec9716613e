import type { ApiClient } from "./api.js";
import type { IntroQuestion } from "./types.js";

// Two steps: a registration form, then the initiator-supplied intro test.
// The test both introduces the context and measures competency; the score
// shown afterwards is exactly the server's number.

export interface OnboardingResult {
  participantId: string;
  competency: number;
}

const GROUPS = [
  "decision_maker",
  "interest_group",
  "expert",
  "planner",
  "end_user",
  "initiator",
];
const ESTIMATES = ["end_user", "knowledgeable", "expert"];

function select(name: string, values: string[]): HTMLSelectElement {
  const node = document.createElement("select");
  node.name = name;
  for (const value of values) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value.replace("_", " ");
    node.appendChild(option);
  }
  return node;
}

export function renderOnboarding(
  api: ApiClient,
  container: HTMLElement,
  onDone: (result: OnboardingResult) => void,
): void {
  container.textContent = "";
  const form = document.createElement("form");
  form.className = "register-form";
  const nameInput = document.createElement("input");
  nameInput.name = "name";
  nameInput.placeholder = "Your name";
  const group = select("stakeholderGroup", GROUPS);
  const estimate = select("selfEstimation", ESTIMATES);
  const start = document.createElement("button");
  start.type = "submit";
  start.textContent = "Join";
  form.append(nameInput, group, estimate, start);
  container.appendChild(form);

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    if (!nameInput.value.trim()) return;
    const registered = await api.register(
      nameInput.value.trim(),
      group.value,
      estimate.value,
    );
    renderIntroTest(api, container, registered.participantId, registered.introTest, onDone);
  });
}

export function renderIntroTest(
  api: ApiClient,
  container: HTMLElement,
  participantId: string,
  questions: IntroQuestion[],
  onDone: (result: OnboardingResult) => void,
): void {
  container.textContent = "";
  const form = document.createElement("form");
  form.className = "intro-test";
  const intro = document.createElement("p");
  intro.textContent =
    "A few questions about the context before you start contributing.";
  form.appendChild(intro);
  questions.forEach((question, index) => {
    const block = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = question.text;
    block.appendChild(legend);
    question.options.forEach((option, optionIndex) => {
      const label = document.createElement("label");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = `q${index}`;
      radio.value = String(optionIndex);
      label.append(radio, document.createTextNode(option));
      block.appendChild(label);
    });
    form.appendChild(block);
  });
  const finish = document.createElement("button");
  finish.type = "submit";
  finish.textContent = questions.length > 0 ? "Finish test" : "Continue";
  form.appendChild(finish);
  container.appendChild(form);

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const choices: number[] = [];
    for (let index = 0; index < questions.length; index += 1) {
      const picked = form.querySelector<HTMLInputElement>(
        `input[name="q${index}"]:checked`,
      );
      if (picked === null) return; // every question needs an answer
      choices.push(Number(picked.value));
    }
    const scored = await api.submitIntroTest(participantId, choices);
    container.textContent = "";
    const done = document.createElement("p");
    done.className = "competency-note";
    done.dataset.competency = String(scored.competency);
    done.textContent = `Welcome! Measured competency: ${scored.competency}`;
    container.appendChild(done);
    onDone({ participantId, competency: scored.competency });
  });
}
