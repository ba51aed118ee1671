export {
  loadRunDir,
  readEpisodesCsv,
  readStepsCsv,
  runLabel,
  EPISODE_FIELDS,
  STEP_FIELDS,
} from "./artifacts.js";
export type { EpisodeRow, RunArtifact, StepRow } from "./artifacts.js";
export { barsData, curvesData, BAR_METRICS, SMOOTH_WINDOW } from "./figures.js";
export type { BarsData, CurvesData, PanelData, SeriesData } from "./figures.js";
export { finitePairs, mean, movingAverage, sampleSd } from "./series.js";
export { renderBars, renderCurves } from "./svg.js";
export { main } from "./cli.js";
