/**
 * Live end-to-end sessions against the real service: one human-driven
 * client plus truthful bots completes a three-agent divide-and-choose
 * game and a two-agent bid-and-choose game. The final allocations
 * must equal what the in-process engine produces for the same play,
 * and no HTTP response may carry another agent's utility parameters.
 */

import { spawnSync } from "node:child_process";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  MannadivClient,
  type ProblemJson,
  type SessionView,
} from "../src/api.js";
import { type ShareJson, isCommodityShare } from "../src/model.js";
import {
  type ChooseControl,
  type DivisionControl,
  renderState,
} from "../src/render.js";
import { type LiveServer, startServer } from "./helpers/server.js";

const DNC3_PROBLEM: ProblemJson = {
  manna: { kind: "commodity", omega: [1, 1] },
  agents: [
    { name: "You", utility: { family: "leontief", scale: 10 } },
    { name: "BotLinear", utility: { family: "linear", scale: 5 } },
    { name: "BotMax", utility: { family: "anti_leontief", scale: 10 } },
  ],
};

const BNC2_PROBLEM: ProblemJson = {
  manna: { kind: "commodity", omega: [1, 1] },
  agents: [
    { name: "You", utility: { family: "leontief", scale: 1 } },
    { name: "BotMax", utility: { family: "anti_leontief", scale: 1 } },
  ],
  measure: { price: [1, 1] },
};

// Strings that would only appear if a response leaked someone's
// utility specification or realized utilities.
const PRIVATE_MARKERS = [
  '"family"',
  '"coeffs"',
  '"weights"',
  '"rho"',
  '"expr"',
  '"pieces"',
  '"utilities"',
  "leontief",
  "linear",
  "polynomial",
  "piecewise",
];

let server: LiveServer;
const responseLog: string[] = [];

const loggingFetch: typeof fetch = async (input, init) => {
  const res = await fetch(input, init);
  const text = await res.text();
  responseLog.push(text);
  return new Response(text, {
    status: res.status,
    headers: { "content-type": "application/json" },
  });
};

function engineExpected(spec: Record<string, unknown>): ShareJson[] {
  const script = fileURLToPath(
    new URL("./helpers/engine_expected.py", import.meta.url),
  );
  const proc = spawnSync("python3", [script], {
    input: JSON.stringify(spec),
    encoding: "utf8",
  });
  expect(proc.status, proc.stderr).toBe(0);
  return JSON.parse(proc.stdout);
}

function expectSameAllocation(got: ShareJson[], want: ShareJson[]): void {
  expect(got).toHaveLength(want.length);
  for (let i = 0; i < got.length; i++) {
    const g = got[i];
    const w = want[i];
    expect(isCommodityShare(g)).toBe(isCommodityShare(w));
    if (isCommodityShare(g) && isCommodityShare(w)) {
      expect(g.z).toHaveLength(w.z.length);
      for (let k = 0; k < g.z.length; k++) {
        expect(Math.abs(g.z[k] - w.z[k])).toBeLessThan(1e-9);
      }
    }
  }
}

beforeAll(async () => {
  server = await startServer();
});

afterAll(() => {
  server?.stop();
});

describe("live divide-and-choose, three agents", () => {
  it("a human divider and two truthful bots finish the game", async () => {
    const client = new MannadivClient(server.base, loggingFetch);
    const created = await client.createSession({
      problem: DNC3_PROBLEM,
      rule: "dnc",
      slots: [
        { kind: "human" },
        { kind: "bot", strategy: "truthful" },
        { kind: "bot", strategy: "truthful" },
      ],
    });
    const token = created.tokens["0"];
    expect(token).toBeTruthy();

    let view = await client.getState(created.id, { token });
    expect(view.phase).toBe("await_division");
    expect(view.expected).toEqual([0]);

    // Drive the division through the same control the UI renders:
    // default sliders cut each good into equal thirds.
    const control = renderState(view).control as DivisionControl;
    expect(control.kind).toBe("division-sliders");
    expect(control.submitEnabled).toBe(true);
    view = await client.submitAction(created.id, token, {
      type: "divide",
      shares: control.shares,
    });

    // The bots accept and the matching resolves without further input.
    while (view.phase !== "done") {
      view = await client.getState(created.id, { token, wait: 5 });
    }
    expect(view.assignment).toBeDefined();
    expect(view.utility).toBeDefined();

    const transcript = await client.transcript(created.id);
    expect(transcript.done).toBe(true);
    const want = engineExpected({
      scenario: "dnc3",
      problem: DNC3_PROBLEM,
      human_shares: control.shares,
    });
    expectSameAllocation(transcript.allocation!, want);
  });
});

describe("live bid-and-choose, two agents", () => {
  it("a human bidder wins the first stop and takes a budget share", async () => {
    const client = new MannadivClient(server.base, loggingFetch);
    const created = await client.createSession({
      problem: BNC2_PROBLEM,
      rule: "bnc",
      slots: [{ kind: "human" }, { kind: "bot", strategy: "truthful" }],
    });
    const token = created.tokens["0"];

    let view = await client.getState(created.id, { token });
    expect(view.phase).toBe("await_bids");
    expect(view.clock?.t).toBe(0);

    // Bid below the truthful bot's stopping time, so the human is
    // served first with a budget of 0.3.
    view = await client.submitAction(created.id, token, {
      type: "bid",
      value: 0.3,
    });
    expect(view.phase).toBe("await_share_choice");
    expect(view.served).toBe(0);
    expect(view.budget).toBeCloseTo(0.3, 9);

    const picker = renderState(view, {
      pick: [0.3, 0.3],
      price: [0.5, 0.5],
    }).control as ChooseControl;
    expect(picker.kind).toBe("share-picker");
    expect(picker.submitEnabled).toBe(true);
    view = await client.submitAction(created.id, token, {
      type: "choose",
      share: { z: picker.pick },
    });

    while (view.phase !== "done") {
      view = await client.getState(created.id, { token, wait: 5 });
    }
    expect(view.utility).toBeCloseTo(0.3, 9);
    expect(view.guarantee).toBeCloseTo(1 / 3, 6);

    const transcript = await client.transcript(created.id);
    const want = engineExpected({
      scenario: "bnc2",
      problem: BNC2_PROBLEM,
      human_bid: 0.3,
      human_pick: [0.3, 0.3],
    });
    expectSameAllocation(transcript.allocation!, want);

    // An anonymous observer sees the public feed but nothing private.
    const anon = await client.getState(created.id);
    expect(anon.phase).toBe("done");
    expect(anon).not.toHaveProperty("assignment");
    expect(anon).not.toHaveProperty("utility");
    expect(anon).not.toHaveProperty("guarantee");
  });
});

describe("privacy", () => {
  it("no response carried anyone's utility parameters", () => {
    expect(responseLog.length).toBeGreaterThan(5);
    for (const body of responseLog) {
      for (const marker of PRIVATE_MARKERS) {
        expect(body, `marker ${marker} leaked in: ${body.slice(0, 200)}`).not.toContain(
          marker,
        );
      }
    }
  });
});
