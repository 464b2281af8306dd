/**
 * Chat view: transcript, one in-flight message at a time with optimistic
 * append, cited-memory chips per reply (rank order, expandable details),
 * a non-blocking toast with retry on provider failures, and a terminal
 * "session closed" lock when the session conflicts or is closed into a
 * diary entry.
 */

import { ApiClient, ApiError, NetworkError } from "./api.js";
import { DiaryEntry, RankedMemory } from "./schemas.js";

export interface ChatHandle {
  element: HTMLElement;
  send(text: string): Promise<void>;
  closeSession(): Promise<void>;
  readonly locked: boolean;
}

function memoryChip(memory: RankedMemory): HTMLElement {
  const chip = document.createElement("details");
  chip.className = "memory-chip";
  chip.dataset.fragmentId = memory.fragment_id;
  const summary = document.createElement("summary");
  summary.textContent = memory.event_summary;
  const meta = document.createElement("p");
  meta.className = "chip-meta";
  const feeling = memory.top_emotion ?? "no dominant emotion";
  meta.textContent = `${feeling} · ${memory.age_days.toFixed(1)} days ago · ${memory.term}-term`;
  chip.append(summary, meta);
  return chip;
}

function diaryCard(entry: DiaryEntry): HTMLElement {
  const card = document.createElement("article");
  card.className = "diary-card";
  const text = document.createElement("p");
  text.className = "diary-text";
  text.textContent = entry.diary_text;
  card.append(text);
  const tags = document.createElement("p");
  tags.className = "hashtags";
  tags.textContent = entry.hashtags.join(" ");
  card.append(tags);
  return card;
}

export function renderChat(
  container: HTMLElement,
  client: ApiClient,
  sessionId: string,
  onClosed?: (entry: DiaryEntry) => void,
): ChatHandle {
  let locked = false;
  let pending = false;

  const root = document.createElement("section");
  root.className = "chat";
  const transcript = document.createElement("div");
  transcript.className = "transcript";
  const toastArea = document.createElement("div");
  toastArea.className = "toast-area";

  const form = document.createElement("form");
  form.className = "composer";
  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "Tell me about your day...";
  const sendButton = document.createElement("button");
  sendButton.type = "submit";
  sendButton.textContent = "Send";
  const closeButton = document.createElement("button");
  closeButton.type = "button";
  closeButton.className = "close-session";
  closeButton.textContent = "Close session & write diary";
  form.append(input, sendButton);
  root.append(transcript, toastArea, form, closeButton);
  container.replaceChildren(root);

  function bubble(speaker: "user" | "agent", text: string): HTMLElement {
    const element = document.createElement("div");
    element.className = `bubble ${speaker}`;
    element.textContent = text;
    transcript.append(element);
    return element;
  }

  function setBusy(busy: boolean): void {
    pending = busy;
    input.disabled = busy || locked;
    sendButton.disabled = busy || locked;
    closeButton.disabled = busy || locked;
  }

  function lock(reason: string): void {
    locked = true;
    setBusy(false);
    const banner = document.createElement("div");
    banner.className = "closed-banner";
    banner.textContent = reason;
    root.insertBefore(banner, form);
  }

  function toast(message: string, retry?: () => void): void {
    const element = document.createElement("div");
    element.className = "toast";
    const text = document.createElement("span");
    text.textContent = message;
    element.append(text);
    if (retry) {
      const button = document.createElement("button");
      button.className = "toast-retry";
      button.textContent = "Retry";
      button.addEventListener("click", () => {
        element.remove();
        retry();
      });
      element.append(button);
    }
    const dismiss = document.createElement("button");
    dismiss.className = "toast-dismiss";
    dismiss.textContent = "×";
    dismiss.addEventListener("click", () => element.remove());
    element.append(dismiss);
    toastArea.append(element);
  }

  async function send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || pending || locked) return;
    const optimistic = bubble("user", trimmed);
    setBusy(true);
    try {
      const response = await client.postMessage(sessionId, trimmed);
      const reply = bubble("agent", response.reply);
      if (response.ranked.length > 0) {
        const chips = document.createElement("div");
        chips.className = "chip-row";
        for (const memory of response.ranked) chips.append(memoryChip(memory));
        reply.after(chips);
      }
      input.value = "";
    } catch (exc) {
      optimistic.classList.add("failed");
      if (exc instanceof ApiError && exc.code === "conflict") {
        lock("Session closed — start a new session to keep chatting.");
      } else if (
        exc instanceof NetworkError ||
        (exc instanceof ApiError && exc.status >= 500)
      ) {
        optimistic.remove();
        toast("The assistant is unreachable right now.", () => void send(trimmed));
      } else if (exc instanceof ApiError) {
        optimistic.remove();
        toast(exc.message);
      } else {
        throw exc;
      }
    } finally {
      if (!locked) setBusy(false);
    }
  }

  async function closeSession(): Promise<void> {
    if (pending || locked) return;
    setBusy(true);
    try {
      const result = await client.closeSession(sessionId);
      transcript.append(diaryCard(result.diary));
      lock("Session closed — today's diary entry is ready below.");
      onClosed?.(result.diary);
    } catch (exc) {
      if (exc instanceof ApiError && exc.code === "conflict") {
        lock("Session closed — start a new session to keep chatting.");
      } else if (exc instanceof ApiError || exc instanceof NetworkError) {
        toast(exc.message);
      } else {
        throw exc;
      }
    } finally {
      if (!locked) setBusy(false);
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void send(input.value);
  });
  closeButton.addEventListener("click", () => void closeSession());

  return {
    element: root,
    send,
    closeSession,
    get locked() {
      return locked;
    },
  };
}
