import type { AnswerPayload, EiCard } from "./types.js";

// One control per card, matching the question type. getPayload() returns
// null while the control is incomplete; the submit button keys off that.

export interface CardControl {
  root: HTMLElement;
  getPayload(): AnswerPayload | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function textControl(kind: "name"): CardControl {
  const root = el("div", "control control-text");
  const input = el("input");
  input.type = "text";
  input.placeholder = "Type a name…";
  root.appendChild(input);
  return {
    root,
    getPayload() {
      const text = input.value.trim();
      return text ? { kind, text } : null;
    },
  };
}

function choiceButtons(kind: "confirm" | "duplicate"): CardControl {
  const root = el("div", "control control-choice");
  let selected: "yes" | "no" | "dont_know" | null = null;
  const buttons: HTMLButtonElement[] = [];
  const entries: Array<["yes" | "no" | "dont_know", string, string]> = [
    ["yes", "Yes", "choice-yes"],
    ["no", "No", "choice-no"],
    // deliberately de-emphasized: present for the overwhelmed, not inviting
    ["dont_know", "I don't know", "choice-dont-know muted"],
  ];
  for (const [value, label, className] of entries) {
    const button = el("button", `choice ${className}`, label);
    button.type = "button";
    button.dataset.choice = value;
    button.addEventListener("click", () => {
      selected = value;
      for (const other of buttons) other.classList.remove("selected");
      button.classList.add("selected");
    });
    buttons.push(button);
    root.appendChild(button);
  }
  return {
    root,
    getPayload() {
      return selected === null ? null : { kind, choice: selected };
    },
  };
}

function pairwiseSlider(): CardControl {
  const root = el("div", "control control-pairwise");
  const left = el("span", "slider-side", "first is far more important");
  const right = el("span", "slider-side", "second is far more important");
  const slider = el("input");
  slider.type = "range";
  slider.min = "-4";
  slider.max = "4";
  slider.step = "1";
  slider.value = "0";
  let touched = false;
  slider.addEventListener("input", () => {
    touched = true;
  });
  const row = el("div", "slider-row");
  row.append(left, slider, right);
  root.appendChild(row);
  return {
    root,
    getPayload() {
      // an untouched slider is not an answer, even though 0 is a level
      if (!touched) return null;
      return { kind: "pairwise", intensity: Number(slider.value) };
    },
  };
}

function orderedMultiSelect(card: EiCard): CardControl {
  const root = el("div", "control control-set");
  const cap = card.k ?? card.options.length;
  const chosen: string[] = [];
  const note = el("p", "cap-note", `Pick up to ${cap}, in order of importance.`);
  root.appendChild(note);
  const list = el("div", "set-options");
  const rankBadges = new Map<string, HTMLElement>();

  const renumber = () => {
    for (const [id, badge] of rankBadges) {
      const index = chosen.indexOf(id);
      badge.textContent = index >= 0 ? String(index + 1) : "";
    }
  };

  for (const option of card.options) {
    const button = el("button", "set-option");
    button.type = "button";
    button.dataset.optionId = option.id;
    const badge = el("span", "rank-badge");
    rankBadges.set(option.id, badge);
    button.append(badge, el("span", "set-label", option.label));
    button.addEventListener("click", () => {
      const index = chosen.indexOf(option.id);
      if (index >= 0) {
        chosen.splice(index, 1);
        button.classList.remove("selected");
      } else if (chosen.length < cap) {
        chosen.push(option.id);
        button.classList.add("selected");
      } else {
        // the cap is enforced here, before anything can be submitted
        note.classList.add("cap-hit");
        note.textContent = `Only ${cap} picks allowed; unselect one first.`;
        return;
      }
      renumber();
    });
    list.appendChild(button);
  }
  root.appendChild(list);
  return {
    root,
    getPayload() {
      return chosen.length > 0 ? { kind: "set", chosen: [...chosen] } : null;
    },
  };
}

function parentPicker(card: EiCard): CardControl {
  const root = el("div", "control control-parent");
  let selected: string | null = null;
  const radios: HTMLInputElement[] = [];
  for (const option of card.options) {
    const label = el("label", "parent-option");
    const radio = el("input");
    radio.type = "radio";
    radio.name = `parent-${card.eiId}`;
    radio.value = option.id;
    radio.addEventListener("click", () => {
      selected = option.id;
      alternative.value = "";
      for (const other of radios) other.checked = other === radio;
    });
    radios.push(radio);
    label.append(radio, el("span", undefined, option.label));
    root.appendChild(label);
  }
  const alternative = el("input", "parent-alternative");
  alternative.type = "text";
  alternative.placeholder = "…or name a better parent";
  alternative.addEventListener("input", () => {
    if (alternative.value.trim()) {
      selected = null;
      for (const radio of radios) radio.checked = false;
    }
  });
  if (card.allowFreeText) root.appendChild(alternative);
  return {
    root,
    getPayload() {
      const text = alternative.value.trim();
      if (text) return { kind: "parent", alternativeName: text };
      if (selected !== null) return { kind: "parent", parentId: selected };
      return null;
    },
  };
}

export function buildControl(card: EiCard): CardControl {
  switch (card.type) {
    case "name":
    case "determine_common_name":
      return textControl("name");
    case "confirm":
      return choiceButtons("confirm");
    case "identify_duplicates":
      return choiceButtons("duplicate");
    case "prioritize_pairwise":
      return pairwiseSlider();
    case "choose_set_based":
      return orderedMultiSelect(card);
    case "select_parent":
      return parentPicker(card);
    default:
      throw new Error(`no control for question type ${card.type}`);
  }
}
