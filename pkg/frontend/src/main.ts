/**
 * Browser entry point. Joins a session from the query string
 * (?session=ID&token=TOKEN&base=URL), long-polls for events on a loop
 * that is independent of action submission, and re-renders on every
 * change. Protocol errors from the server are shown verbatim; a 409
 * conflict triggers a state refetch.
 */

import { type Action, ApiError, MannadivClient, type SessionView } from "./api.js";
import { type LocalControlState, renderState } from "./render.js";

interface AppState {
  view: SessionView | null;
  local: LocalControlState;
  error: string | null;
}

export function wireControls(
  root: HTMLElement,
  state: AppState,
  submit: (action: Action) => void,
  redraw: () => void,
): void {
  root.querySelectorAll<HTMLInputElement>("[data-cut]").forEach((input) => {
    input.addEventListener("change", () => {
      const row = input.closest<HTMLElement>(".slider-row");
      const rows = Array.from(root.querySelectorAll(".slider-row"));
      const k = row ? rows.indexOf(row) : 0;
      const i = Number(input.dataset.cut);
      const cuts = state.local.cuts ?? [];
      (cuts[k] ??= [])[i] = Number(input.value);
      state.local.cuts = cuts;
      redraw();
    });
  });
  root.querySelectorAll<HTMLInputElement>("[data-share]").forEach((box) => {
    box.addEventListener("change", () => {
      const idx = Number(box.dataset.share);
      const sel = new Set(state.local.selection ?? []);
      if (box.checked) sel.add(idx);
      else sel.delete(idx);
      state.local.selection = [...sel].sort((a, b) => a - b);
      redraw();
    });
  });
  root.querySelector<HTMLInputElement>("#bid")?.addEventListener("change", (ev) => {
    state.local.bid = Number((ev.target as HTMLInputElement).value);
    redraw();
  });
  root.querySelectorAll<HTMLInputElement>("[data-good]").forEach((input) => {
    input.addEventListener("change", () => {
      const k = Number(input.dataset.good);
      const pick = state.local.pick ?? [];
      pick[k] = Number(input.value);
      state.local.pick = pick;
      redraw();
    });
  });

  const view = state.view;
  if (!view) return;
  const screen = renderState(view, state.local);
  const c = screen.control;
  const on = (id: string, make: () => Action) => {
    const btn = root.querySelector<HTMLButtonElement>(`#${id}`);
    btn?.addEventListener("click", () => {
      btn.disabled = true;
      submit(make());
    });
  };
  if (c.kind === "division-sliders") {
    on("submit-division", () => ({ type: "divide", shares: c.shares }));
  } else if (c.kind === "accept-cards") {
    on("submit-acceptance", () => ({
      type: "accept",
      liked: state.local.selection ?? [],
    }));
  } else if (c.kind === "bid-dial") {
    on("submit-bid", () => ({ type: "bid", value: c.value }));
  } else if (c.kind === "share-picker") {
    on("submit-choice", () => ({
      type: "choose",
      share: { z: c.pick },
    }));
  }
}

export async function runApp(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? "";
  const sid = params.get("session");
  const token = params.get("token") ?? undefined;
  if (!sid) {
    root.innerHTML = "<p>missing ?session=ID in the URL</p>";
    return;
  }
  const client = new MannadivClient(base);
  const state: AppState = { view: null, local: {}, error: null };
  let allEvents: SessionView["events"] = [];

  const redraw = () => {
    if (!state.view) return;
    const screen = renderState({ ...state.view, events: allEvents }, state.local);
    root.innerHTML =
      screen.html + (state.error ? `<p class="error">${state.error}</p>` : "");
    wireControls(root, { ...state, view: { ...state.view, events: allEvents } }, submit, redraw);
  };

  const submit = (action: Action) => {
    if (!token) return;
    client
      .submitAction(sid, token, action)
      .then((view) => {
        state.error = null;
        applyView(view);
      })
      .catch((e) => {
        if (e instanceof ApiError) {
          state.error = e.protocolError
            ? `${e.protocolError}: ${(e.detail as { detail?: string }).detail ?? ""}`
            : String(e.message);
          // A conflict means the local picture was stale: refetch.
          client.getState(sid, { token }).then(applyView);
        } else {
          state.error = "network error, retrying";
        }
        redraw();
      });
  };

  const applyView = (view: SessionView) => {
    state.view = view;
    const seen = view.event_count - view.events.length;
    allEvents = allEvents.slice(0, seen).concat(view.events);
    redraw();
  };

  // The polling loop: fetch whatever is new, render, repeat. Action
  // submissions happen from event handlers and never block this loop.
  for (;;) {
    try {
      const view = await client.getState(sid, {
        token,
        since: allEvents.length,
        wait: 8,
      });
      applyView(view);
      if (view.phase === "done") break;
    } catch {
      await new Promise((r) => setTimeout(r, 1000));
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void runApp(document.getElementById("app") as HTMLElement);
}
