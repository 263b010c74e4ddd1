/**
 * Typed client for the session service. Every payload carries "v": 1.
 * Reads long-poll with ?since=eventIndex; writes retry transient
 * network failures with backoff and surface protocol conflicts (409)
 * so the caller can refetch state and re-render.
 */

import type { MannaJson, ShareJson } from "./model.js";

export interface SlotSpec {
  kind: "human" | "bot";
  strategy?: "truthful" | "random";
  seed?: number;
}

export interface ProblemJson {
  manna: MannaJson;
  agents: { name: string; utility: Record<string, unknown> }[];
  measure?: { price: number[] } | { density: [number, number, number][] };
}

export interface CreateSessionRequest {
  v: 1;
  problem: ProblemJson;
  rule: "dnc" | "mk" | "bnc";
  slots: SlotSpec[];
  ordering?: number[];
  direction?: "increasing" | "decreasing";
  forced_accept?: boolean;
}

export interface CreateSessionResponse {
  v: 1;
  id: string;
  tokens: Record<string, string>;
}

export interface SessionEvent {
  type: string;
  step?: number;
  agent?: number;
  [key: string]: unknown;
}

export interface SessionView {
  v: 1;
  id: string;
  rule: "dnc" | "mk" | "bnc";
  n: number;
  names: string[];
  phase: string;
  step: number;
  you: number | null;
  expected: number[];
  remaining: ShareJson;
  event_count: number;
  events: SessionEvent[];
  manna: MannaJson;
  offers?: ShareJson[];
  clock?: { t: number; direction: "increasing" | "decreasing" };
  served?: number;
  budget?: number;
  assignment?: ShareJson;
  utility?: number;
  guarantee?: number | null;
}

export interface TranscriptJson {
  v: 1;
  rule: string;
  params: Record<string, unknown>;
  manna: MannaJson;
  names: string[];
  events: SessionEvent[];
  done: boolean;
  allocation?: ShareJson[];
}

export type Action =
  | { type: "divide"; shares: ShareJson[] }
  | { type: "accept"; liked: number[] }
  | { type: "bid"; value: number }
  | { type: "choose"; share: ShareJson };

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }

  /** Protocol-level name for 409 conflicts, e.g. "NonIncreasingBid". */
  get protocolError(): string | null {
    if (this.status !== 409) return null;
    const d = this.detail as { error?: string };
    return d && typeof d === "object" && d.error ? d.error : "ProtocolError";
  }
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class MannadivClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    const body = await res.json();
    if (!res.ok) {
      throw new ApiError(res.status, (body as { detail?: unknown }).detail ?? body);
    }
    return body as T;
  }

  healthz(): Promise<{ v: 1; ok: boolean }> {
    return this.request("/healthz");
  }

  createSession(
    body: Omit<CreateSessionRequest, "v">,
  ): Promise<CreateSessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ v: 1, ...body }),
    });
  }

  getState(
    id: string,
    opts: { token?: string; since?: number; wait?: number } = {},
  ): Promise<SessionView> {
    const q = new URLSearchParams();
    if (opts.token !== undefined) q.set("token", opts.token);
    if (opts.since !== undefined) q.set("since", String(opts.since));
    if (opts.wait !== undefined) q.set("wait", String(opts.wait));
    const qs = q.toString();
    return this.request(`/sessions/${id}` + (qs ? `?${qs}` : ""));
  }

  postAction(id: string, token: string, action: Action): Promise<SessionView> {
    return this.request(`/sessions/${id}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ v: 1, token, action }),
    });
  }

  transcript(id: string, token?: string): Promise<TranscriptJson> {
    const qs = token ? `?token=${encodeURIComponent(token)}` : "";
    return this.request(`/sessions/${id}/transcript` + qs);
  }

  /**
   * Submit with retry. Network failures back off and retry; HTTP
   * errors pass through untouched, so a 409 conflict reaches the
   * caller, which should refetch the state.
   */
  async submitAction(
    id: string,
    token: string,
    action: Action,
    retries = 3,
  ): Promise<SessionView> {
    let delay = 200;
    for (let attempt = 0; ; attempt++) {
      try {
        return await this.postAction(id, token, action);
      } catch (e) {
        if (e instanceof ApiError || attempt >= retries) {
          throw e;
        }
        await sleep(delay);
        delay *= 2;
      }
    }
  }
}
