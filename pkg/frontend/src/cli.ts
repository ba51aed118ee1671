#!/usr/bin/env node
/**
 * lamp-plot: batch figure tool over simulator run directories.
 *
 *   lamp-plot curves RUN_DIR... -o fig5.svg [--dump data.json]
 *   lamp-plot bars --metric social_welfare RUN_DIR... -o bars.svg [--dump data.json]
 *
 * Output is SVG markup; --dump writes the plotted series as JSON so the
 * figure contents can be checked numerically.
 */

import { realpathSync, writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { loadRunDir } from "./artifacts.js";
import { BAR_METRICS, barsData, curvesData } from "./figures.js";
import { renderBars, renderCurves } from "./svg.js";

const USAGE = `usage:
  lamp-plot curves RUN_DIR... -o OUT.svg [--dump DATA.json]
  lamp-plot bars --metric METRIC RUN_DIR... -o OUT.svg [--dump DATA.json]

metrics: ${BAR_METRICS.join(", ")}`;

interface Args {
  command: "curves" | "bars";
  runDirs: string[];
  out: string;
  dump: string | null;
  metric: string | null;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new Error(`missing command\n${USAGE}`);
  }
  const command = argv[0];
  if (command !== "curves" && command !== "bars") {
    throw new Error(`unknown command ${JSON.stringify(command)}\n${USAGE}`);
  }
  const runDirs: string[] = [];
  let out: string | null = null;
  let dump: string | null = null;
  let metric: string | null = null;
  let i = 1;
  while (i < argv.length) {
    const arg = argv[i];
    if (arg === "-o" || arg === "--out") {
      out = argv[++i];
      if (out === undefined) {
        throw new Error(`${arg} needs a path`);
      }
    } else if (arg === "--dump") {
      dump = argv[++i];
      if (dump === undefined) {
        throw new Error("--dump needs a path");
      }
    } else if (arg === "--metric") {
      metric = argv[++i];
      if (metric === undefined) {
        throw new Error("--metric needs a column name");
      }
    } else if (arg.startsWith("-")) {
      throw new Error(`unknown option ${JSON.stringify(arg)}\n${USAGE}`);
    } else {
      runDirs.push(arg);
    }
    i++;
  }
  if (out === null) {
    throw new Error("missing -o OUT.svg");
  }
  if (runDirs.length === 0) {
    throw new Error("no run directories given");
  }
  if (command === "bars" && metric === null) {
    throw new Error("bars needs --metric (one of: " + BAR_METRICS.join(", ") + ")");
  }
  return { command, runDirs, out, dump, metric };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const runs = args.runDirs.map(loadRunDir);
    let svg: string;
    let dumpData: unknown;
    if (args.command === "curves") {
      const data = curvesData(runs);
      svg = renderCurves(data);
      dumpData = data;
    } else {
      const data = barsData(runs, args.metric as string);
      svg = renderBars(data);
      dumpData = data;
    }
    let outPath = args.out;
    if (outPath.toLowerCase().endsWith(".png")) {
      // the tool emits vector markup, never raster
      outPath = outPath.slice(0, -4) + ".svg";
      process.stderr.write(`note: writing SVG markup to ${outPath} instead of PNG\n`);
    }
    writeFileSync(outPath, svg + "\n", "utf8");
    if (args.dump !== null) {
      writeFileSync(args.dump, JSON.stringify(dumpData, null, 2) + "\n", "utf8");
    }
    process.stdout.write(
      `${args.command}: ${args.runDirs.length} run${args.runDirs.length === 1 ? "" : "s"} -> ${outPath}\n`,
    );
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

let isDirectRun = false;
if (process.argv[1] !== undefined) {
  try {
    // realpath so the check survives the symlink npm installs into .bin
    isDirectRun = realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    isDirectRun = false;
  }
}

if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
