/**
 * Client-side mirror of the wire model: shares, partitions, measures,
 * and the partition closure check the service applies before accepting
 * a division. The tolerances here are the server's, so a division that
 * passes locally is never rejected for closure reasons on submit.
 */

export const FEASIBILITY_TOL = 1e-9;
export const CLOSURE_TOL = 1e-6;

export interface CommodityShareJson {
  z: number[];
}

export interface KnifeShareJson {
  intervals: [number, number][];
}

export type ShareJson = CommodityShareJson | KnifeShareJson;

export interface CommodityMannaJson {
  kind: "commodity";
  omega: number[];
}

export interface KnifeMannaJson {
  kind: "knife";
}

export type MannaJson = CommodityMannaJson | KnifeMannaJson;

export function isCommodityShare(s: ShareJson): s is CommodityShareJson {
  return "z" in s;
}

export class ClosureError extends Error {}

/** Sorted, merged interval union; rejects reversed or out-of-range pieces. */
export function normalizeIntervals(
  intervals: [number, number][],
): [number, number][] {
  const kept: [number, number][] = [];
  for (const [ra, rb] of intervals) {
    const a = Number(ra);
    const b = Number(rb);
    if (b < a - FEASIBILITY_TOL) {
      throw new ClosureError(`interval (${a}, ${b}) is reversed`);
    }
    if (!(-FEASIBILITY_TOL <= a && b <= 1 + FEASIBILITY_TOL)) {
      throw new ClosureError("intervals must lie inside [0, 1]");
    }
    if (b - a > FEASIBILITY_TOL) {
      kept.push([Math.max(a, 0), Math.min(b, 1)]);
    }
  }
  kept.sort((p, q) => p[0] - q[0] || p[1] - q[1]);
  const merged: [number, number][] = [];
  for (const [a, b] of kept) {
    const last = merged[merged.length - 1];
    if (last && a <= last[1] + FEASIBILITY_TOL) {
      if (a < last[1] - FEASIBILITY_TOL) {
        throw new ClosureError("intervals overlap");
      }
      last[1] = Math.max(last[1], b);
    } else {
      merged.push([a, b]);
    }
  }
  return merged;
}

export function shareLength(s: ShareJson): number {
  if (isCommodityShare(s)) {
    return s.z.reduce((acc, v) => acc + v, 0);
  }
  return normalizeIntervals(s.intervals).reduce((acc, [a, b]) => acc + (b - a), 0);
}

/** Normalized measure of a commodity share under a price vector. */
export function shareMeasure(price: number[], z: number[]): number {
  let total = 0;
  for (let k = 0; k < price.length; k++) {
    total += price[k] * z[k];
  }
  return total;
}

function checkCommodityShare(z: number[]): void {
  for (const v of z) {
    if (!Number.isFinite(v)) {
      throw new ClosureError("share coordinate is not finite");
    }
    if (v < -FEASIBILITY_TOL) {
      throw new ClosureError("commodity share has a negative coordinate");
    }
  }
}

/**
 * Throws ClosureError unless `shares` reassemble `whole` within the
 * server tolerance. For commodity manna the per-good sums must match
 * omega; for knife manna the interval unions must neither overlap nor
 * leave part of [0, 1] uncovered.
 */
export function checkPartitionClosure(
  shares: ShareJson[],
  whole: ShareJson,
  tol: number = CLOSURE_TOL,
): void {
  if (shares.length === 0) {
    throw new ClosureError("a partition needs at least one share");
  }
  const commodity = isCommodityShare(whole);
  for (const s of shares) {
    if (isCommodityShare(s) !== commodity) {
      throw new ClosureError("mixed share kinds in one partition");
    }
  }
  if (commodity) {
    const omega = (whole as CommodityShareJson).z;
    checkCommodityShare(omega);
    const total = omega.map(() => 0);
    for (const s of shares) {
      const z = (s as CommodityShareJson).z;
      if (z.length !== omega.length) {
        throw new ClosureError("share dimension does not match the manna");
      }
      checkCommodityShare(z);
      for (let k = 0; k < z.length; k++) {
        total[k] += Math.max(z[k], 0);
      }
    }
    const slack = Math.max(tol, 1e-9 * (1 + Math.max(...omega)));
    for (let k = 0; k < omega.length; k++) {
      if (Math.abs(total[k] - omega[k]) > slack) {
        throw new ClosureError(
          `partition shares sum to ${total[k]} on good ${k}, expected ${omega[k]}`,
        );
      }
    }
  } else {
    let covered = 0;
    const all: [number, number][] = [];
    for (const s of shares) {
      const ivs = normalizeIntervals((s as KnifeShareJson).intervals);
      covered += ivs.reduce((acc, [a, b]) => acc + (b - a), 0);
      all.push(...ivs.map(([a, b]): [number, number] => [a, b]));
    }
    const union = normalizeIntervals(all);
    const unionLen = union.reduce((acc, [a, b]) => acc + (b - a), 0);
    if (Math.abs(covered - unionLen) > 1e-6) {
      throw new ClosureError("partition intervals overlap");
    }
    const wholeLen = shareLength(whole);
    if (Math.abs(unionLen - wholeLen) > 1e-6) {
      throw new ClosureError("partition intervals do not cover the manna");
    }
  }
}

export function partitionIsClosed(
  shares: ShareJson[],
  whole: ShareJson,
  tol: number = CLOSURE_TOL,
): boolean {
  try {
    checkPartitionClosure(shares, whole, tol);
    return true;
  } catch (e) {
    if (e instanceof ClosureError) {
      return false;
    }
    throw e;
  }
}

/**
 * Build an n-partition of a commodity bundle from per-good cut points:
 * `cuts[k]` holds n - 1 sorted fractions of good k, so share i gets
 * the slice between consecutive cuts. This is what the division
 * sliders produce; the result always passes the closure check.
 */
export function sharesFromCuts(omega: number[], cuts: number[][], n: number): ShareJson[] {
  const shares: number[][] = Array.from({ length: n }, () => omega.map(() => 0));
  for (let k = 0; k < omega.length; k++) {
    const row = [...(cuts[k] ?? [])].sort((a, b) => a - b);
    if (row.length !== n - 1) {
      throw new ClosureError(`good ${k} needs ${n - 1} cut points`);
    }
    const bounds = [0, ...row.map((c) => Math.min(Math.max(c, 0), 1)), 1];
    for (let i = 0; i < n; i++) {
      shares[i][k] = Math.max(bounds[i + 1] - bounds[i], 0) * omega[k];
    }
  }
  return shares.map((z) => ({ z }));
}
