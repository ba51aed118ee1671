/**
 * Figure data builders. Both figures are assembled as plain data first
 * (the same series the renderer draws), so --dump can emit exactly what
 * lands on the page and tests can check aggregates against the CSVs.
 */

import type { RunArtifact } from "./artifacts.js";
import { finitePairs, mean, movingAverage, sampleSd } from "./series.js";

export const SMOOTH_WINDOW = 5;

export interface SeriesData {
  label: string;
  x: number[];
  raw: number[];
  smooth: number[];
}

export interface PanelData {
  title: string;
  xLabel: string;
  yLabel: string;
  series: SeriesData[];
}

export interface CurvesData {
  window: number;
  panels: PanelData[];
}

export interface BarData {
  label: string;
  mean: number;
  sd: number;
  n: number;
}

export interface BarsData {
  metric: string;
  bars: BarData[];
}

/** Episode columns that can be aggregated into bars. */
export const BAR_METRICS = [
  "years",
  "avg_household_reward",
  "social_welfare",
  "total_consumption",
  "total_labor",
  "final_gini",
  "gdp",
] as const;

export type BarMetric = (typeof BAR_METRICS)[number];

function series(label: string, x: number[], raw: number[]): SeriesData {
  return { label, x, raw, smooth: movingAverage(raw, SMOOTH_WINDOW) };
}

function episodeSeries(run: RunArtifact, field: "years" | "avg_household_reward"): SeriesData {
  const x = run.episodes.map((e) => e.episode);
  const raw = run.episodes.map((e) => e[field]);
  return series(run.label, x, raw);
}

function lossSeries(run: RunArtifact, field: "actor_loss" | "critic_loss"): SeriesData {
  // x is the flat row index in steps.csv, i.e. simulated steps so far
  const xs = run.steps.map((_, i) => i);
  const ys = run.steps.map((s) => s[field]);
  const { x, y } = finitePairs(xs, ys);
  return series(run.label, x, y);
}

export function curvesData(runs: RunArtifact[]): CurvesData {
  if (runs.length === 0) {
    throw new Error("curves needs at least one run directory");
  }
  return {
    window: SMOOTH_WINDOW,
    panels: [
      {
        title: "Economic Years",
        xLabel: "episode",
        yLabel: "years",
        series: runs.map((r) => episodeSeries(r, "years")),
      },
      {
        title: "Actor Loss",
        xLabel: "step",
        yLabel: "loss",
        series: runs.map((r) => lossSeries(r, "actor_loss")),
      },
      {
        title: "Critic Loss",
        xLabel: "step",
        yLabel: "loss",
        series: runs.map((r) => lossSeries(r, "critic_loss")),
      },
      {
        title: "Household Reward",
        xLabel: "episode",
        yLabel: "mean reward",
        series: runs.map((r) => episodeSeries(r, "avg_household_reward")),
      },
    ],
  };
}

export function barsData(runs: RunArtifact[], metric: string): BarsData {
  if (runs.length === 0) {
    throw new Error("bars needs at least one run directory");
  }
  if (!(BAR_METRICS as readonly string[]).includes(metric)) {
    throw new Error(
      `unknown metric ${JSON.stringify(metric)}; valid metrics: ${BAR_METRICS.join(", ")}`,
    );
  }
  const field = metric as BarMetric;
  return {
    metric,
    bars: runs.map((run) => {
      const values = run.episodes.map((e) => e[field]);
      if (values.length === 0) {
        throw new Error(`run directory ${run.dir} has no episodes to aggregate`);
      }
      return { label: run.label, mean: mean(values), sd: sampleSd(values), n: values.length };
    }),
  };
}
