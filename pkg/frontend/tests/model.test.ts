import { describe, expect, it } from "vitest";

import {
  ClosureError,
  checkPartitionClosure,
  normalizeIntervals,
  partitionIsClosed,
  shareLength,
  shareMeasure,
  sharesFromCuts,
} from "../src/model.js";

describe("commodity closure", () => {
  const whole = { z: [1, 1] };

  it("accepts an exact partition", () => {
    expect(
      partitionIsClosed([{ z: [0.25, 0.5] }, { z: [0.75, 0.5] }], whole),
    ).toBe(true);
  });

  it("accepts slack below the tolerance", () => {
    expect(
      partitionIsClosed([{ z: [0.25 + 3e-7, 0.5] }, { z: [0.75, 0.5] }], whole),
    ).toBe(true);
  });

  it("rejects a leaky partition", () => {
    expect(
      partitionIsClosed([{ z: [0.25, 0.5] }, { z: [0.7, 0.5] }], whole),
    ).toBe(false);
  });

  it("rejects negative coordinates", () => {
    expect(
      partitionIsClosed([{ z: [-0.1, 0.5] }, { z: [1.1, 0.5] }], whole),
    ).toBe(false);
  });

  it("rejects dimension mismatches and mixed kinds", () => {
    expect(partitionIsClosed([{ z: [1, 1, 0] }], whole)).toBe(false);
    expect(
      partitionIsClosed([{ z: [1, 1] }, { intervals: [[0, 1]] }], whole),
    ).toBe(false);
    expect(partitionIsClosed([], whole)).toBe(false);
  });

  it("throws ClosureError with a named good", () => {
    expect(() =>
      checkPartitionClosure([{ z: [0.2, 1] }, { z: [0.2, 0] }], whole),
    ).toThrow(ClosureError);
  });
});

describe("knife closure", () => {
  const whole = { intervals: [[0, 1]] as [number, number][] };

  it("accepts consecutive intervals", () => {
    expect(
      partitionIsClosed(
        [{ intervals: [[0, 0.4]] }, { intervals: [[0.4, 1]] }],
        whole,
      ),
    ).toBe(true);
  });

  it("accepts a share made of two pieces", () => {
    expect(
      partitionIsClosed(
        [
          { intervals: [[0, 0.2], [0.8, 1]] },
          { intervals: [[0.2, 0.8]] },
        ],
        whole,
      ),
    ).toBe(true);
  });

  it("rejects gaps and overlaps beyond the tolerance", () => {
    expect(
      partitionIsClosed(
        [{ intervals: [[0, 0.4]] }, { intervals: [[0.5, 1]] }],
        whole,
      ),
    ).toBe(false);
    expect(
      partitionIsClosed(
        [{ intervals: [[0, 0.5]] }, { intervals: [[0.4, 1]] }],
        whole,
      ),
    ).toBe(false);
  });

  it("rejects reversed or out-of-range intervals", () => {
    expect(() => normalizeIntervals([[0.5, 0.2]])).toThrow(ClosureError);
    expect(() => normalizeIntervals([[-0.2, 0.5]])).toThrow(ClosureError);
    expect(() => normalizeIntervals([[0.5, 1.2]])).toThrow(ClosureError);
  });

  it("merges touching intervals and drops empty ones", () => {
    expect(normalizeIntervals([[0.5, 0.5], [0, 0.2], [0.2, 0.4]])).toEqual([
      [0, 0.4],
    ]);
  });

  it("measures lengths", () => {
    expect(shareLength({ intervals: [[0, 0.25], [0.5, 1]] })).toBeCloseTo(0.75, 12);
    expect(shareLength({ z: [0.25, 0.5] })).toBeCloseTo(0.75, 12);
  });
});

describe("cuts and measures", () => {
  it("sharesFromCuts always closes", () => {
    const omega = [2, 3];
    const shares = sharesFromCuts(omega, [[0.2, 0.7], [0.5, 0.5]], 3);
    expect(shares).toHaveLength(3);
    expect(partitionIsClosed(shares, { z: omega })).toBe(true);
    expect((shares[1] as { z: number[] }).z[1]).toBeCloseTo(0, 12);
  });

  it("sharesFromCuts rejects a short cut row", () => {
    expect(() => sharesFromCuts([1], [[0.5]], 3)).toThrow(ClosureError);
  });

  it("shareMeasure is the priced mass", () => {
    expect(shareMeasure([0.5, 0.5], [0.3, 0.3])).toBeCloseTo(0.3, 12);
    expect(shareMeasure([1, 0], [0.3, 0.9])).toBeCloseTo(0.3, 12);
  });
});
