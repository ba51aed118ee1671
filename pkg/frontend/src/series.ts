/**
 * Small numeric helpers shared by the figure builders. The moving average
 * is the only smoothing the tool applies, and it is the documented oracle:
 * a trailing mean over the last `window` points (shorter at the start).
 */

export function movingAverage(ys: number[], window: number): number[] {
  if (!Number.isInteger(window) || window < 1) {
    throw new Error(`window must be a positive integer, got ${window}`);
  }
  const out: number[] = new Array(ys.length);
  let sum = 0;
  for (let i = 0; i < ys.length; i++) {
    sum += ys[i];
    if (i >= window) {
      sum -= ys[i - window];
    }
    out[i] = sum / Math.min(i + 1, window);
  }
  return out;
}

export function mean(ys: number[]): number {
  if (ys.length === 0) {
    throw new Error("mean of empty series");
  }
  let sum = 0;
  for (const y of ys) {
    sum += y;
  }
  return sum / ys.length;
}

/** Sample standard deviation (ddof=1); 0 for a single point. */
export function sampleSd(ys: number[]): number {
  if (ys.length === 0) {
    throw new Error("sd of empty series");
  }
  if (ys.length < 2) {
    return 0;
  }
  const m = mean(ys);
  let ss = 0;
  for (const y of ys) {
    ss += (y - m) * (y - m);
  }
  return Math.sqrt(ss / (ys.length - 1));
}

/**
 * Pair up x and y, dropping points whose y is null or non-finite. Losses
 * are blank before the replay warmup, so raw columns need this filter.
 */
export function finitePairs(
  xs: number[],
  ys: (number | null)[],
): { x: number[]; y: number[] } {
  const x: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < ys.length; i++) {
    const v = ys[i];
    if (v !== null && Number.isFinite(v)) {
      x.push(xs[i]);
      y.push(v);
    }
  }
  return { x, y };
}
