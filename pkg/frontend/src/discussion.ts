import type { ApiClient } from "./api.js";

// Per-element thread: list of posts plus a reply box. Discussing merged
// or removed elements is allowed; the server keeps them addressable.

export async function renderDiscussion(
  api: ApiClient,
  elementId: string,
  participantId: string | null,
  container: HTMLElement,
): Promise<void> {
  container.textContent = "";
  const heading = document.createElement("h2");
  heading.textContent = `Discussion for ${elementId}`;
  container.appendChild(heading);
  const list = document.createElement("ul");
  list.className = "posts";
  const posts = await api.fetchDiscussion(elementId);
  for (const post of posts) {
    const item = document.createElement("li");
    item.className = "post";
    const author = document.createElement("span");
    author.className = "post-author";
    author.textContent = post.participantId;
    const body = document.createElement("p");
    body.textContent = post.text;
    item.append(author, body);
    list.appendChild(item);
  }
  if (posts.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-note";
    empty.textContent = "No posts yet.";
    container.appendChild(empty);
  }
  container.appendChild(list);
  if (participantId === null) return;
  const form = document.createElement("form");
  form.className = "post-form";
  const input = document.createElement("textarea");
  input.placeholder = "Add to the discussion…";
  const send = document.createElement("button");
  send.type = "submit";
  send.textContent = "Post";
  form.append(input, send);
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    await api.postDiscussion(elementId, participantId, text);
    await renderDiscussion(api, elementId, participantId, container);
  });
  container.appendChild(form);
}
