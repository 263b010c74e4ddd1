/**
 * Pure view layer: turn a redacted session view plus local control
 * state into a screen description and an HTML fragment. Only fields
 * present in the API schema are rendered; nothing about other players
 * is computed or displayed. Controls are enabled only for actions the
 * current phase allows the viewing agent to take.
 */

import type { SessionEvent, SessionView } from "./api.js";
import {
  type ShareJson,
  isCommodityShare,
  partitionIsClosed,
  shareMeasure,
  sharesFromCuts,
} from "./model.js";

export interface DivisionControl {
  kind: "division-sliders";
  /** One slider row per good (or one for the knife interval), each
   * with n - 1 cut points in [0, 1]. */
  rows: { label: string; cuts: number[] }[];
  shares: ShareJson[];
  /** Disabled when the cuts do not form a closed partition. */
  submitEnabled: boolean;
}

export interface AcceptControl {
  kind: "accept-cards";
  cards: { index: number; share: ShareJson; selected: boolean }[];
  /** Disabled when the selection is empty: an empty acceptance is a
   * protocol error, so it is blocked client-side. */
  submitEnabled: boolean;
}

export interface BidControl {
  kind: "bid-dial";
  floor: number;
  value: number;
  submitEnabled: boolean;
}

export interface ChooseControl {
  kind: "share-picker";
  budget: number;
  pick: number[];
  measure: number;
  /** Disabled when the picked share overruns the measure budget. */
  submitEnabled: boolean;
}

export interface PassiveControl {
  kind: "wait" | "done" | "fallback";
  message: string;
}

export type Control =
  | DivisionControl
  | AcceptControl
  | BidControl
  | ChooseControl
  | PassiveControl;

export interface LocalControlState {
  cuts?: number[][];
  selection?: number[];
  bid?: number;
  pick?: number[];
  price?: number[];
}

export interface Screen {
  heading: string;
  status: string;
  feed: string[];
  control: Control;
  html: string;
}

const KNOWN_PHASES = [
  "await_division",
  "await_acceptances",
  "await_bids",
  "await_share_choice",
  "done",
];

function fmt(x: number): string {
  return (Math.round(x * 1000) / 1000).toString();
}

export function describeShare(s: ShareJson): string {
  if (isCommodityShare(s)) {
    return "(" + s.z.map(fmt).join(", ") + ")";
  }
  if (s.intervals.length === 0) return "nothing";
  return s.intervals.map(([a, b]) => `[${fmt(a)}, ${fmt(b)}]`).join(" + ");
}

/** Stacked bar per commodity, or an interval strip for knife manna. */
export function shareBarsHtml(s: ShareJson, whole: ShareJson): string {
  if (isCommodityShare(s) && isCommodityShare(whole)) {
    const bars = s.z
      .map((v, k) => {
        const cap = whole.z[k] || 1;
        const pct = Math.max(0, Math.min(100, (100 * v) / cap));
        return `<div class="bar"><span style="width:${pct.toFixed(1)}%"></span></div>`;
      })
      .join("");
    return `<div class="share-bars">${bars}</div>`;
  }
  if (!isCommodityShare(s)) {
    const strips = s.intervals
      .map(
        ([a, b]) =>
          `<span class="strip" style="left:${(100 * a).toFixed(1)}%;` +
          `width:${(100 * (b - a)).toFixed(1)}%"></span>`,
      )
      .join("");
    return `<div class="interval-strip">${strips}</div>`;
  }
  return "";
}

export function describeEvent(e: SessionEvent, names: string[]): string {
  const who = (i: unknown) =>
    typeof i === "number" && names[i] !== undefined ? names[i] : String(i);
  switch (e.type) {
    case "start":
      return `game started: ${String(e.rule)} with ${names.join(", ")}`;
    case "division":
      return `${who(e.agent)} divided the manna into ${
        (e.shares as unknown[]).length
      } shares`;
    case "acceptance":
      return `${who(e.agent)} likes shares ${(e.liked as number[]).join(", ")}`;
    case "match":
      return `matching announced for round ${e.step}`;
    case "bid":
      return `${who(e.agent)} bid ${fmt(e.value as number)}`;
    case "stop":
      return `clock stopped at ${fmt(e.time as number)} for ${who(e.agent)}`;
    case "choice":
      return `${who(e.agent)} chose ${describeShare(e.share as ShareJson)}`;
    case "assign":
      return `${who(e.agent)} receives ${describeShare(e.share as ShareJson)}`;
    case "end":
      return "game over";
    default:
      return e.type;
  }
}

function defaultCuts(nGoods: number, n: number): number[][] {
  const cuts = Array.from({ length: n - 1 }, (_, i) => (i + 1) / n);
  return Array.from({ length: nGoods }, () => [...cuts]);
}

function buildControl(view: SessionView, local: LocalControlState): Control {
  const you = view.you;
  const yourTurn = you !== null && view.expected.includes(you);

  if (view.phase === "done") {
    let message = "the game is over";
    if (view.assignment !== undefined) {
      message = `you received ${describeShare(view.assignment)}`;
      if (view.utility !== undefined) {
        message += `, worth ${fmt(view.utility)}`;
      }
      if (view.guarantee !== undefined && view.guarantee !== null) {
        message += ` against a guarantee of ${fmt(view.guarantee)}`;
      }
    }
    return { kind: "done", message };
  }

  if (!KNOWN_PHASES.includes(view.phase)) {
    return { kind: "fallback", message: `unknown phase "${view.phase}"` };
  }

  if (!yourTurn) {
    const waitingOn = view.expected.map((i) => view.names[i] ?? String(i));
    return {
      kind: "wait",
      message: waitingOn.length
        ? `waiting for ${waitingOn.join(", ")}`
        : "waiting for the server",
    };
  }

  if (view.phase === "await_division") {
    const remaining = view.remaining;
    const m = view.expected.length >= 1 ? countActiveShares(view) : view.n;
    if (isCommodityShare(remaining)) {
      const cuts = local.cuts ?? defaultCuts(remaining.z.length, m);
      const shares = sharesFromCuts(remaining.z, cuts, m);
      return {
        kind: "division-sliders",
        rows: remaining.z.map((_, k) => ({ label: `good ${k}`, cuts: cuts[k] })),
        shares,
        submitEnabled: partitionIsClosed(shares, remaining),
      };
    }
    const cuts = local.cuts ?? defaultCuts(1, m);
    const row = [...cuts[0]].sort((a, b) => a - b);
    const bounds = [0, ...row, 1];
    const shares: ShareJson[] = Array.from({ length: m }, (_, i) => ({
      intervals: [[bounds[i], bounds[i + 1]] as [number, number]],
    }));
    return {
      kind: "division-sliders",
      rows: [{ label: "interval", cuts: row }],
      shares,
      submitEnabled: partitionIsClosed(shares, remaining),
    };
  }

  if (view.phase === "await_acceptances") {
    const offers = view.offers ?? [];
    const selected = new Set(local.selection ?? []);
    return {
      kind: "accept-cards",
      cards: offers.map((share, index) => ({
        index,
        share,
        selected: selected.has(index),
      })),
      submitEnabled: selected.size > 0,
    };
  }

  if (view.phase === "await_bids") {
    const floor = view.clock?.t ?? 0;
    const value = Math.min(Math.max(local.bid ?? floor, floor), 1);
    return { kind: "bid-dial", floor, value, submitEnabled: true };
  }

  // await_share_choice: pick a bundle within the measure budget.
  const remaining = view.remaining;
  const budget = view.budget ?? 0;
  const dim = isCommodityShare(remaining) ? remaining.z.length : 0;
  const pick = local.pick ?? Array.from({ length: dim }, () => 0);
  const price = local.price ?? Array.from({ length: dim }, () => 1 / Math.max(dim, 1));
  const m = shareMeasure(price, pick);
  const fits =
    isCommodityShare(remaining) &&
    pick.every((v, k) => v >= 0 && v <= remaining.z[k] + 1e-9);
  return {
    kind: "share-picker",
    budget,
    pick,
    measure: m,
    submitEnabled: fits && m <= budget + 1e-6,
  };
}

function countActiveShares(view: SessionView): number {
  // The divider owes one share per active agent: itself plus everyone
  // not yet assigned. The assign events tell us who already left.
  const assigned = new Set(
    view.events
      .concat()
      .filter((e) => e.type === "assign")
      .map((e) => e.agent as number),
  );
  const active = view.n - assigned.size;
  return Math.max(active, 2);
}

function controlHtml(c: Control): string {
  switch (c.kind) {
    case "division-sliders": {
      const rows = c.rows
        .map(
          (r) =>
            `<div class="slider-row" data-label="${r.label}">` +
            r.cuts
              .map(
                (v, i) =>
                  `<input type="range" min="0" max="1" step="0.01" ` +
                  `data-cut="${i}" value="${v}">`,
              )
              .join("") +
            `</div>`,
        )
        .join("");
      return (
        rows +
        `<button id="submit-division"${c.submitEnabled ? "" : " disabled"}>divide</button>`
      );
    }
    case "accept-cards": {
      const cards = c.cards
        .map(
          (card) =>
            `<label class="card${card.selected ? " selected" : ""}">` +
            `<input type="checkbox" data-share="${card.index}"` +
            `${card.selected ? " checked" : ""}> ${describeShare(card.share)}</label>`,
        )
        .join("");
      return (
        cards +
        `<button id="submit-acceptance"${c.submitEnabled ? "" : " disabled"}>accept</button>`
      );
    }
    case "bid-dial":
      return (
        `<input type="range" id="bid" min="${c.floor}" max="1" step="0.001" ` +
        `value="${c.value}"> floor ${fmt(c.floor)}` +
        `<button id="submit-bid"${c.submitEnabled ? "" : " disabled"}>bid</button>`
      );
    case "share-picker":
      return (
        c.pick
          .map(
            (v, k) =>
              `<input type="number" data-good="${k}" min="0" step="0.01" value="${v}">`,
          )
          .join("") +
        ` measure ${fmt(c.measure)} of budget ${fmt(c.budget)}` +
        `<button id="submit-choice"${c.submitEnabled ? "" : " disabled"}>take it</button>`
      );
    default:
      return `<p class="message">${c.message}</p>`;
  }
}

export function renderState(
  view: SessionView,
  local: LocalControlState = {},
): Screen {
  const control = buildControl(view, local);
  const feed = view.events.map((e) => describeEvent(e, view.names));
  const name = view.you !== null ? view.names[view.you] ?? "observer" : "observer";
  const heading = `${view.rule} game, ${view.n} agents, round ${view.step}`;
  let status: string;
  if (view.phase === "done") {
    status = "finished";
  } else if (control.kind === "wait" || control.kind === "fallback") {
    status = control.message;
  } else {
    status = `your move, ${name}`;
  }
  const html =
    `<section class="session"><h1>${heading}</h1>` +
    `<p class="status">${status}</p>` +
    `<div class="remaining">${shareBarsHtml(view.remaining, view.manna.kind === "commodity" ? { z: view.manna.omega } : { intervals: [[0, 1]] })}</div>` +
    `<div class="controls">${controlHtml(control)}</div>` +
    `<ul class="feed">${feed.map((f) => `<li>${f}</li>`).join("")}</ul>` +
    `</section>`;
  return { heading, status, feed, control, html };
}
