import type { SooElement, SooView } from "./types.js";

// Read-only browser for the current hierarchy. Everything shown comes
// straight from GET /api/soo; names link to the element's discussion.

function discussionLink(element: SooElement): HTMLAnchorElement {
  const link = document.createElement("a");
  link.className = "el-name";
  link.href = `#/discussion/${element.id}`;
  link.textContent = element.name;
  return link;
}

function badge(text: string, className: string): HTMLElement {
  const span = document.createElement("span");
  span.className = `badge ${className}`;
  span.textContent = text;
  return span;
}

function validityBar(element: SooElement): HTMLElement {
  const wrap = document.createElement("span");
  wrap.className = "validity-bar";
  wrap.dataset.validity = String(element.validity);
  wrap.title = `validity ${element.validity}`;
  const fill = document.createElement("span");
  fill.className = "validity-fill";
  fill.style.width = `${element.validity * 100}%`;
  wrap.appendChild(fill);
  return wrap;
}

function renderNode(element: SooElement, childrenOf: Map<string | null, SooElement[]>): HTMLLIElement {
  const item = document.createElement("li");
  item.className = `tree-node state-${element.state}`;
  item.dataset.elementId = element.id;
  const row = document.createElement("div");
  row.className = "tree-row";
  row.append(
    badge(element.kind, `kind-${element.kind}`),
    discussionLink(element),
    badge(element.state, `state-${element.state}`),
    validityBar(element),
  );
  if (element.definition) {
    const def = document.createElement("p");
    def.className = "definition";
    def.textContent = element.definition;
    row.appendChild(def);
  }
  item.appendChild(row);
  const kids = childrenOf.get(element.id) ?? [];
  if (kids.length > 0) {
    const list = document.createElement("ul");
    for (const kid of kids) list.appendChild(renderNode(kid, childrenOf));
    item.appendChild(list);
  }
  return item;
}

export function renderTree(soo: SooView, container: HTMLElement): void {
  container.textContent = "";
  const heading = document.createElement("h2");
  heading.textContent = soo.goalMeta.title ?? "Set of objectives";
  container.appendChild(heading);
  const phase = document.createElement("p");
  phase.className = "phase-note";
  phase.textContent = `Phase: ${soo.phase}`;
  container.appendChild(phase);
  if (soo.goal === null) {
    container.appendChild(document.createTextNode("No goal defined yet."));
    return;
  }
  const childrenOf = new Map<string | null, SooElement[]>();
  for (const element of soo.elements) {
    const list = childrenOf.get(element.parentId) ?? [];
    list.push(element);
    childrenOf.set(element.parentId, list);
  }
  const root = soo.elements.find((element) => element.id === soo.goal);
  const list = document.createElement("ul");
  list.className = "tree-root";
  if (root) list.appendChild(renderNode(root, childrenOf));
  container.appendChild(list);
}
