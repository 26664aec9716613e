import type { StatsView } from "./types.js";

// The two headline counters plus element counts and the phase banner.
// Values are rendered exactly as the server reports them.

function counter(label: string, value: number, id: string): HTMLElement {
  const box = document.createElement("div");
  box.className = "counter";
  const big = document.createElement("span");
  big.className = "counter-value";
  big.id = id;
  big.textContent = String(value);
  const caption = document.createElement("span");
  caption.className = "counter-label";
  caption.textContent = label;
  box.append(big, caption);
  return box;
}

export function renderStats(
  stats: StatsView,
  participantId: string | null,
  container: HTMLElement,
): void {
  container.textContent = "";
  const banner = document.createElement("div");
  banner.className = `phase-banner phase-${stats.phase}`;
  banner.textContent =
    stats.phase === "structure"
      ? "Structure phase: collecting and validating elements"
      : `Weighting phase (milestones: ${stats.milestoneCount})`;
  container.appendChild(banner);

  const personal =
    participantId === null
      ? 0
      : stats.perParticipantAnswerCount[participantId] ?? 0;
  const counters = document.createElement("div");
  counters.className = "counters";
  counters.append(
    counter("Your answered questions", personal, "stat-personal"),
    counter(
      "Platform answers in the last 24 hours",
      stats.platformAnswersLast24h,
      "stat-last24h",
    ),
  );
  container.appendChild(counters);

  const table = document.createElement("table");
  table.className = "element-counts";
  const head = table.insertRow();
  for (const label of ["kind", "candidate", "validated"]) {
    const cell = document.createElement("th");
    cell.textContent = label;
    head.appendChild(cell);
  }
  for (const kind of Object.keys(stats.activeElementCounts).sort()) {
    const states = stats.activeElementCounts[kind] ?? {};
    const row = table.insertRow();
    row.insertCell().textContent = kind;
    row.insertCell().textContent = String(states["candidate"] ?? 0);
    row.insertCell().textContent = String(states["validated"] ?? 0);
  }
  container.appendChild(table);
}
