import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { loadRunDir, readStepsCsv, runLabel } from "../src/artifacts.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));
const MADDPG_DIR = join(FIXTURES, "run_maddpg");
const LAMP_DIR = join(FIXTURES, "run_lamp");

describe("loadRunDir", () => {
  it("loads a real run directory", () => {
    const run = loadRunDir(MADDPG_DIR);
    expect(run.config.policy).toBe("maddpg");
    expect(run.episodes.length).toBe(3);
    expect(run.steps.length).toBeGreaterThan(0);
    // every step row belongs to a listed episode
    const episodes = new Set(run.episodes.map((e) => e.episode));
    for (const s of run.steps) {
      expect(episodes.has(s.episode)).toBe(true);
    }
  });

  it("round-trips float columns bit for bit", () => {
    const run = loadRunDir(MADDPG_DIR);
    const text = readFileSync(join(MADDPG_DIR, "episodes.csv"), "utf8");
    const lines = text.trim().split("\n").slice(1);
    lines.forEach((line, i) => {
      const welfare = Number(line.split(",")[3]);
      expect(run.episodes[i].social_welfare).toBe(welfare);
    });
  });

  it("parses blank losses as null and keeps later losses finite", () => {
    const steps = readStepsCsv(join(MADDPG_DIR, "steps.csv"));
    expect(steps[0].actor_loss).toBeNull();
    expect(steps[0].critic_loss).toBeNull();
    const trained = steps.filter((s) => s.actor_loss !== null);
    expect(trained.length).toBeGreaterThan(0);
    for (const s of trained) {
      expect(Number.isFinite(s.actor_loss)).toBe(true);
    }
  });

  it("names the missing file when steps.csv is absent", () => {
    const dir = mkdtempSync(join(tmpdir(), "lamp-plot-"));
    writeFileSync(join(dir, "config.json"), "{}\n");
    writeFileSync(join(dir, "episodes.csv"), "episode\n0\n");
    expect(() => loadRunDir(dir)).toThrow(/steps\.csv/);
  });

  it("rejects a header drift, naming the file", () => {
    const dir = mkdtempSync(join(tmpdir(), "lamp-plot-"));
    writeFileSync(join(dir, "config.json"), "{}\n");
    writeFileSync(
      join(dir, "episodes.csv"),
      "episode,years,reward,social_welfare,total_consumption,total_labor,final_gini,gdp\n",
    );
    writeFileSync(join(dir, "steps.csv"), "episode\n");
    expect(() => loadRunDir(dir)).toThrow(/unexpected header in .*episodes\.csv/);
  });

  it("rejects non-numeric values in numeric columns", () => {
    const dir = mkdtempSync(join(tmpdir(), "lamp-plot-"));
    writeFileSync(
      join(dir, "steps.csv"),
      "episode,step,actor_loss,critic_loss,avg_household_reward,utility_sum,news_kind,backend_calls\n" +
        "0,0,,,oops,-1.0,none,0\n",
    );
    expect(() => readStepsCsv(join(dir, "steps.csv"))).toThrow(
      /non-numeric avg_household_reward/,
    );
  });
});

describe("runLabel", () => {
  it("combines policy, ablations, and scenario", () => {
    expect(runLabel({ policy: "maddpg", scenario: "s1", ablations: [] })).toBe("maddpg (s1)");
    expect(
      runLabel({ policy: "lamp", scenario: "s2", ablations: ["speak", "long_term"] }),
    ).toBe("lamp -speak,long_term (s2)");
    expect(runLabel({})).toBe("unknown");
  });

  it("labels the fixture runs from their config snapshots", () => {
    expect(loadRunDir(MADDPG_DIR).label).toBe("maddpg (s1)");
    expect(loadRunDir(LAMP_DIR).label).toBe("lamp -speak (s1)");
  });
});
