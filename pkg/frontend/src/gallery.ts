/**
 * Diary gallery: newest-first cards of diary text, hashtag chips, and the
 * generated image (or a placeholder tile when no image was produced).
 * Pagination is snapshot-stable: the token from the first page keeps later
 * pages consistent even while new entries are being written.
 */

import { ApiClient, ApiError, NetworkError } from "./api.js";
import { DiaryEntry } from "./schemas.js";

export interface GalleryHandle {
  element: HTMLElement;
  goTo(page: number): Promise<void>;
  readonly page: number;
  readonly pageCount: number;
}

function entryCard(entry: DiaryEntry): HTMLElement {
  const card = document.createElement("article");
  card.className = "gallery-card";
  card.dataset.entryId = entry.id;

  if (entry.image_ref === null) {
    const placeholder = document.createElement("div");
    placeholder.className = "image-placeholder";
    placeholder.textContent = "no illustration for this entry";
    card.append(placeholder);
    card.classList.add("text-only");
  } else if (/^https?:\/\//.test(entry.image_ref)) {
    const image = document.createElement("img");
    image.src = entry.image_ref;
    image.alt = "diary illustration";
    card.append(image);
  } else {
    // opaque reference (mock providers): decorative tile labeled by ref
    const tile = document.createElement("div");
    tile.className = "image-tile";
    tile.textContent = entry.image_ref;
    card.append(tile);
  }

  const text = document.createElement("p");
  text.className = "diary-text";
  text.textContent = entry.diary_text;
  card.append(text);

  const tagRow = document.createElement("div");
  tagRow.className = "hashtag-row";
  for (const tag of entry.hashtags) {
    const chip = document.createElement("span");
    chip.className = "hashtag-chip";
    chip.textContent = tag;
    tagRow.append(chip);
  }
  card.append(tagRow);

  const when = document.createElement("time");
  when.textContent = new Date(entry.created_at).toISOString().slice(0, 10);
  card.append(when);
  return card;
}

export function renderGallery(
  container: HTMLElement,
  client: ApiClient,
  userId: string,
  pageSize = 6,
): GalleryHandle {
  const root = document.createElement("section");
  root.className = "gallery";
  const cards = document.createElement("div");
  cards.className = "gallery-cards";
  const status = document.createElement("p");
  status.className = "gallery-status";
  const nav = document.createElement("div");
  nav.className = "gallery-nav";
  const prev = document.createElement("button");
  prev.textContent = "Newer";
  const label = document.createElement("span");
  label.className = "page-label";
  const next = document.createElement("button");
  next.textContent = "Older";
  nav.append(prev, label, next);
  root.append(cards, status, nav);
  container.replaceChildren(root);

  let page = 1;
  let pageCount = 1;
  let snapshot: number | undefined;

  async function goTo(target: number): Promise<void> {
    try {
      const result = await client.listDiaries(userId, target, pageSize, snapshot);
      snapshot = result.snapshot;
      page = result.page;
      pageCount = Math.max(1, Math.ceil(result.total / result.page_size));
      cards.replaceChildren(...result.entries.map(entryCard));
      if (result.total === 0) {
        status.textContent = "No diary entries yet — close a chat session to write your first one.";
        nav.hidden = true;
      } else {
        status.textContent = "";
        nav.hidden = false;
        label.textContent = `Page ${page} of ${pageCount}`;
        prev.disabled = page <= 1;
        next.disabled = page >= pageCount;
      }
    } catch (exc) {
      if (exc instanceof ApiError || exc instanceof NetworkError) {
        status.textContent = `Could not load the journal: ${exc.message}`;
      } else {
        throw exc;
      }
    }
  }

  prev.addEventListener("click", () => void goTo(page - 1));
  next.addEventListener("click", () => void goTo(page + 1));
  void goTo(1);

  return {
    element: root,
    goTo,
    get page() {
      return page;
    },
    get pageCount() {
      return pageCount;
    },
  };
}
