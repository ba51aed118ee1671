import { readFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { loadRunDir } from "../src/artifacts.js";
import { BAR_METRICS, barsData, curvesData } from "../src/figures.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));
const MADDPG_DIR = join(FIXTURES, "run_maddpg");
const LAMP_DIR = join(FIXTURES, "run_lamp");

// independent CSV read: plain line/comma splitting, no parser library
function rawColumn(path: string, column: string): string[] {
  const lines = readFileSync(path, "utf8").trim().split("\n");
  const header = lines[0].split(",");
  const idx = header.indexOf(column);
  expect(idx).toBeGreaterThanOrEqual(0);
  return lines.slice(1).map((line) => line.split(",")[idx]);
}

function numericColumn(path: string, column: string): number[] {
  return rawColumn(path, column)
    .filter((v) => v !== "")
    .map(Number);
}

describe("curvesData", () => {
  it("builds the four panels in order with one series per run", () => {
    const data = curvesData([loadRunDir(MADDPG_DIR), loadRunDir(LAMP_DIR)]);
    expect(data.panels.map((p) => p.title)).toEqual([
      "Economic Years",
      "Actor Loss",
      "Critic Loss",
      "Household Reward",
    ]);
    for (const panel of data.panels) {
      expect(panel.series.length).toBe(2);
      expect(panel.series[0].label).toBe("maddpg (s1)");
      expect(panel.series[1].label).toBe("lamp -speak (s1)");
    }
  });

  it("plots raw columns exactly as stored in the CSVs", () => {
    const data = curvesData([loadRunDir(MADDPG_DIR)]);
    const years = numericColumn(join(MADDPG_DIR, "episodes.csv"), "years");
    const reward = numericColumn(join(MADDPG_DIR, "episodes.csv"), "avg_household_reward");
    const actor = numericColumn(join(MADDPG_DIR, "steps.csv"), "actor_loss");
    const critic = numericColumn(join(MADDPG_DIR, "steps.csv"), "critic_loss");
    expect(data.panels[0].series[0].raw).toEqual(years);
    expect(data.panels[1].series[0].raw).toEqual(actor);
    expect(data.panels[2].series[0].raw).toEqual(critic);
    expect(data.panels[3].series[0].raw).toEqual(reward);
  });

  it("smooths with a trailing moving average of window 5", () => {
    const data = curvesData([loadRunDir(MADDPG_DIR)]);
    expect(data.window).toBe(5);
    for (const panel of data.panels) {
      const { raw, smooth } = panel.series[0];
      expect(smooth.length).toBe(raw.length);
      for (let i = 0; i < raw.length; i++) {
        const start = Math.max(0, i - 4);
        const slice = raw.slice(start, i + 1);
        const want = slice.reduce((a, b) => a + b, 0) / slice.length;
        expect(Math.abs(smooth[i] - want)).toBeLessThan(1e-9);
      }
    }
  });

  it("aligns loss x values with the rows that carry losses", () => {
    const data = curvesData([loadRunDir(MADDPG_DIR)]);
    const rawLosses = rawColumn(join(MADDPG_DIR, "steps.csv"), "actor_loss");
    const wantX = rawLosses
      .map((v, i) => (v === "" ? -1 : i))
      .filter((i) => i >= 0);
    expect(data.panels[1].series[0].x).toEqual(wantX);
  });

  it("rejects an empty run list", () => {
    expect(() => curvesData([])).toThrow(/at least one/);
  });
});

describe("barsData", () => {
  it("bar heights equal the CSV means within 1e-9", () => {
    for (const metric of BAR_METRICS) {
      const data = barsData([loadRunDir(MADDPG_DIR), loadRunDir(LAMP_DIR)], metric);
      expect(data.bars.length).toBe(2);
      for (const [i, dir] of [MADDPG_DIR, LAMP_DIR].entries()) {
        const values = numericColumn(join(dir, "episodes.csv"), metric);
        const want = values.reduce((a, b) => a + b, 0) / values.length;
        expect(Math.abs(data.bars[i].mean - want)).toBeLessThan(1e-9);
        expect(data.bars[i].n).toBe(values.length);
      }
    }
  });

  it("whiskers are the sample standard deviation", () => {
    const data = barsData([loadRunDir(MADDPG_DIR)], "social_welfare");
    const values = numericColumn(join(MADDPG_DIR, "episodes.csv"), "social_welfare");
    const m = values.reduce((a, b) => a + b, 0) / values.length;
    const want = Math.sqrt(
      values.reduce((a, b) => a + (b - m) * (b - m), 0) / (values.length - 1),
    );
    expect(Math.abs(data.bars[0].sd - want)).toBeLessThan(1e-9);
  });

  it("rejects an unknown metric, listing the valid columns", () => {
    let message = "";
    try {
      barsData([loadRunDir(MADDPG_DIR)], "velocity");
    } catch (err) {
      message = (err as Error).message;
    }
    expect(message).toContain("velocity");
    for (const metric of BAR_METRICS) {
      expect(message).toContain(metric);
    }
  });
});

describe("read-only contract", () => {
  it("leaves the run directory byte-identical after building figures", () => {
    const files = ["config.json", "episodes.csv", "steps.csv", "events.log"];
    const before = files.map((f) => readFileSync(join(MADDPG_DIR, f)));
    curvesData([loadRunDir(MADDPG_DIR)]);
    barsData([loadRunDir(MADDPG_DIR)], "years");
    files.forEach((f, i) => {
      expect(readFileSync(join(MADDPG_DIR, f)).equals(before[i])).toBe(true);
    });
  });
});
