import { ApiClient } from "./api.js";
import { renderDiscussion } from "./discussion.js";
import { renderOnboarding } from "./onboarding.js";
import { renderStats } from "./stats.js";
import { StreamFlow } from "./stream.js";
import { renderStreamView } from "./streamview.js";
import { renderTree } from "./tree.js";

// Hash-routed single-page client: onboarding -> stream | tree | stats.

const api = new ApiClient();
let participantId: string | null = null;
let flow: StreamFlow | null = null;

function main(): void {
  const outlet = document.getElementById("outlet");
  if (outlet === null) return;

  async function route(): Promise<void> {
    const hash = window.location.hash || "#/onboarding";
    if (participantId === null && hash !== "#/tree" && !hash.startsWith("#/discussion/")) {
      renderOnboarding(api, outlet!, (result) => {
        participantId = result.participantId;
        flow = new StreamFlow(api, participantId, 10, Date.now() % 100000);
        window.location.hash = "#/stream";
      });
      return;
    }
    if (hash === "#/stream" && participantId !== null) {
      flow = flow ?? new StreamFlow(api, participantId, 10, Date.now() % 100000);
      const view = renderStreamView(api, flow, outlet!, {});
      await view.showCurrent();
      return;
    }
    if (hash === "#/tree") {
      renderTree(await api.fetchSoo(), outlet!);
      return;
    }
    if (hash === "#/stats") {
      renderStats(await api.fetchStats(), participantId, outlet!);
      return;
    }
    const discussion = hash.match(/^#\/discussion\/(.+)$/);
    if (discussion) {
      await renderDiscussion(api, discussion[1]!, participantId, outlet!);
      return;
    }
    window.location.hash = "#/onboarding";
  }

  window.addEventListener("hashchange", () => void route());
  void route();
}

main();
