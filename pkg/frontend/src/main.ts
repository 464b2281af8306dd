/**
 * App shell: hash routing between onboard / chat / diary, one ApiClient,
 * current user and session kept in memory (user id mirrored to
 * localStorage so a reload stays signed in).
 */

import { ApiClient } from "./api.js";
import { renderChat } from "./chat.js";
import { renderGallery } from "./gallery.js";
import { renderOnboarding } from "./onboarding.js";

const BASE_URL =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8600";

const client = new ApiClient(BASE_URL);

interface AppState {
  userId: string | null;
  sessionId: string | null;
}

const state: AppState = {
  userId: localStorage.getItem("persode.userId"),
  sessionId: null,
};

function outlet(): HTMLElement {
  return document.getElementById("outlet") as HTMLElement;
}

function setRoute(route: string): void {
  location.hash = `#/${route}`;
}

async function showOnboard(): Promise<void> {
  const catalogs = await client.catalogs();
  renderOnboarding(outlet(), client, catalogs, (user) => {
    state.userId = user.user_id;
    localStorage.setItem("persode.userId", user.user_id);
    const note = document.createElement("p");
    note.className = "created-note";
    note.textContent = `Welcome! Your journal id is ${user.user_id}.`;
    outlet().append(note);
    setRoute("chat");
  });
}

async function showChat(): Promise<void> {
  if (!state.userId) {
    setRoute("onboard");
    return;
  }
  if (!state.sessionId) {
    const session = await client.openSession(state.userId);
    state.sessionId = session.session_id;
  }
  renderChat(outlet(), client, state.sessionId, () => {
    state.sessionId = null;
  });
}

async function showDiary(): Promise<void> {
  if (!state.userId) {
    setRoute("onboard");
    return;
  }
  renderGallery(outlet(), client, state.userId);
}

const routes: Record<string, () => Promise<void>> = {
  onboard: showOnboard,
  chat: showChat,
  diary: showDiary,
};

async function navigate(): Promise<void> {
  const route = location.hash.replace(/^#\//, "") || "onboard";
  const view = routes[route] ?? showOnboard;
  for (const link of document.querySelectorAll("nav a")) {
    link.classList.toggle("active", link.getAttribute("href") === `#/${route}`);
  }
  try {
    await view();
  } catch (exc) {
    const message = document.createElement("p");
    message.className = "fatal-error";
    message.textContent = `Something went wrong: ${String(exc)}`;
    outlet().replaceChildren(message);
  }
}

window.addEventListener("hashchange", () => void navigate());
window.addEventListener("DOMContentLoaded", () => void navigate());
