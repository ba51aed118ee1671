/**
 * Run-directory loading.
 *
 * A run directory is the on-disk contract with the simulator: episodes.csv,
 * steps.csv, and config.json. Everything here is read-only; headers are
 * checked exactly so a column drift fails loudly instead of plotting junk.
 */

import { readFileSync, existsSync } from "node:fs";
import { join } from "node:path";
import Papa from "papaparse";

export interface EpisodeRow {
  episode: number;
  years: number;
  avg_household_reward: number;
  social_welfare: number;
  total_consumption: number;
  total_labor: number;
  final_gini: number;
  gdp: number;
}

export interface StepRow {
  episode: number;
  step: number;
  actor_loss: number | null;
  critic_loss: number | null;
  avg_household_reward: number;
  utility_sum: number;
  news_kind: string;
  backend_calls: number;
}

export interface RunArtifact {
  dir: string;
  config: Record<string, unknown>;
  episodes: EpisodeRow[];
  steps: StepRow[];
  label: string;
}

export const EPISODE_FIELDS = [
  "episode",
  "years",
  "avg_household_reward",
  "social_welfare",
  "total_consumption",
  "total_labor",
  "final_gini",
  "gdp",
] as const;

export const STEP_FIELDS = [
  "episode",
  "step",
  "actor_loss",
  "critic_loss",
  "avg_household_reward",
  "utility_sum",
  "news_kind",
  "backend_calls",
] as const;

function parseCsv(path: string, fields: readonly string[]): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`failed to parse ${path}: ${first.message} (row ${first.row})`);
  }
  const got = parsed.meta.fields ?? [];
  if (got.length !== fields.length || fields.some((f, i) => got[i] !== f)) {
    throw new Error(
      `unexpected header in ${path}: got [${got.join(", ")}], want [${fields.join(", ")}]`,
    );
  }
  return parsed.data;
}

function toNumber(path: string, field: string, raw: string): number {
  const value = Number(raw);
  if (raw === "" || !Number.isFinite(value)) {
    throw new Error(`non-numeric ${field}=${JSON.stringify(raw)} in ${path}`);
  }
  return value;
}

function toNumberOrNull(path: string, field: string, raw: string): number | null {
  return raw === "" ? null : toNumber(path, field, raw);
}

export function readEpisodesCsv(path: string): EpisodeRow[] {
  return parseCsv(path, EPISODE_FIELDS).map((r) => ({
    episode: toNumber(path, "episode", r.episode),
    years: toNumber(path, "years", r.years),
    avg_household_reward: toNumber(path, "avg_household_reward", r.avg_household_reward),
    social_welfare: toNumber(path, "social_welfare", r.social_welfare),
    total_consumption: toNumber(path, "total_consumption", r.total_consumption),
    total_labor: toNumber(path, "total_labor", r.total_labor),
    final_gini: toNumber(path, "final_gini", r.final_gini),
    gdp: toNumber(path, "gdp", r.gdp),
  }));
}

export function readStepsCsv(path: string): StepRow[] {
  return parseCsv(path, STEP_FIELDS).map((r) => ({
    episode: toNumber(path, "episode", r.episode),
    step: toNumber(path, "step", r.step),
    actor_loss: toNumberOrNull(path, "actor_loss", r.actor_loss),
    critic_loss: toNumberOrNull(path, "critic_loss", r.critic_loss),
    avg_household_reward: toNumber(path, "avg_household_reward", r.avg_household_reward),
    utility_sum: toNumber(path, "utility_sum", r.utility_sum),
    news_kind: r.news_kind,
    backend_calls: toNumber(path, "backend_calls", r.backend_calls),
  }));
}

/** Legend label from the config snapshot: policy, ablations, scenario. */
export function runLabel(config: Record<string, unknown>): string {
  const policy = typeof config.policy === "string" ? config.policy : "unknown";
  const scenario = typeof config.scenario === "string" ? config.scenario : "";
  const ablations = Array.isArray(config.ablations) ? config.ablations : [];
  let label = policy;
  if (ablations.length > 0) {
    label += ` -${ablations.join(",")}`;
  }
  if (scenario !== "") {
    label += ` (${scenario})`;
  }
  return label;
}

export function loadRunDir(dir: string): RunArtifact {
  for (const name of ["config.json", "episodes.csv", "steps.csv"]) {
    const path = join(dir, name);
    if (!existsSync(path)) {
      throw new Error(`run directory ${dir} is missing ${name} (expected ${path})`);
    }
  }
  const config = JSON.parse(readFileSync(join(dir, "config.json"), "utf8")) as Record<
    string,
    unknown
  >;
  const episodes = readEpisodesCsv(join(dir, "episodes.csv"));
  const steps = readStepsCsv(join(dir, "steps.csv"));
  return { dir, config, episodes, steps, label: runLabel(config) };
}
