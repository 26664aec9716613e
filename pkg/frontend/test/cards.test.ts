// Control-level behavior: completeness gating, the k cap, exclusivity.

import { beforeEach, describe, expect, it } from "vitest";

import { buildControl } from "../src/cards.js";
import type { EiCard } from "../src/types.js";

function card(partial: Partial<EiCard>): EiCard {
  return {
    eiId: "q1",
    type: "confirm",
    slot: "confirm",
    targets: ["e1"],
    parentId: null,
    childKind: null,
    k: null,
    allowFreeText: false,
    options: [],
    groupTags: [],
    questionText: "?",
    ...partial,
  };
}

beforeEach(() => {
  document.body.textContent = "";
});

describe("card controls", () => {
  it("text control requires non-blank input", () => {
    const control = buildControl(card({ type: "name", slot: "child_name" }));
    expect(control.getPayload()).toBeNull();
    const input = control.root.querySelector("input")!;
    input.value = "   ";
    expect(control.getPayload()).toBeNull();
    input.value = " Water reuse ";
    expect(control.getPayload()).toEqual({ kind: "name", text: "Water reuse" });
  });

  it("confirm offers a de-emphasized 'I don't know'", () => {
    const control = buildControl(card({ type: "confirm" }));
    const dontKnow = control.root.querySelector<HTMLButtonElement>(
      "button[data-choice=dont_know]",
    )!;
    expect(dontKnow.classList.contains("muted")).toBe(true);
    dontKnow.click();
    expect(control.getPayload()).toEqual({ kind: "confirm", choice: "dont_know" });
  });

  it("duplicate verdicts use the duplicate payload", () => {
    const control = buildControl(card({ type: "identify_duplicates", slot: "duplicate" }));
    control.root.querySelector<HTMLButtonElement>("button[data-choice=no]")!.click();
    expect(control.getPayload()).toEqual({ kind: "duplicate", choice: "no" });
  });

  it("pairwise slider yields nothing until touched", () => {
    const control = buildControl(
      card({ type: "prioritize_pairwise", slot: "pairwise", targets: ["a", "b"] }),
    );
    expect(control.getPayload()).toBeNull();
    const slider = control.root.querySelector<HTMLInputElement>("input[type=range]")!;
    slider.value = "-3";
    slider.dispatchEvent(new Event("input", { bubbles: true }));
    expect(control.getPayload()).toEqual({ kind: "pairwise", intensity: -3 });
  });

  it("ordered selection blocks the pick after the cap", () => {
    const options = [0, 1, 2, 3].map((i) => ({ id: `e${i}`, label: `Option ${i}` }));
    const control = buildControl(
      card({ type: "choose_set_based", slot: "sibling_choice", options, k: 2 }),
    );
    const buttons = [...control.root.querySelectorAll<HTMLButtonElement>(".set-option")];
    buttons[0]!.click();
    buttons[1]!.click();
    buttons[2]!.click(); // over the cap: ignored with a visible note
    expect(control.root.querySelectorAll(".set-option.selected").length).toBe(2);
    expect(control.root.querySelector(".cap-note.cap-hit")).not.toBeNull();
    expect(control.getPayload()).toEqual({ kind: "set", chosen: ["e0", "e1"] });
    // unselecting reopens a slot and keeps the order of the rest
    buttons[0]!.click();
    buttons[3]!.click();
    expect(control.getPayload()).toEqual({ kind: "set", chosen: ["e1", "e3"] });
  });

  it("parent choice is radio or free text, never both", () => {
    const options = [
      { id: "e2", label: "Economic Objectives" },
      { id: "e3", label: "Environmental Objectives" },
    ];
    const control = buildControl(
      card({ type: "select_parent", slot: "parent", options, allowFreeText: true }),
    );
    const radio = control.root.querySelector<HTMLInputElement>("input[type=radio]")!;
    radio.click();
    expect(control.getPayload()).toEqual({ kind: "parent", parentId: "e2" });
    const alternative = control.root.querySelector<HTMLInputElement>(
      ".parent-alternative",
    )!;
    alternative.value = "Social Objectives";
    alternative.dispatchEvent(new Event("input", { bubbles: true }));
    expect(control.getPayload()).toEqual({
      kind: "parent",
      alternativeName: "Social Objectives",
    });
    expect(radio.checked).toBe(false);
  });
});
