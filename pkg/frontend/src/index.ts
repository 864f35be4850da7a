export {
  DataError,
  loadRunDir,
  loadSweepSummary,
  parseIntList,
  parseNewtonTrace,
  parseSnapshotsCsv,
  parseStepsCsv,
} from "./data.js";
export type { NewtonTraceRow, RunDir, SnapshotData, StepRow, SweepCell } from "./data.js";
export {
  ENERGY_FLOOR,
  FIXED_COLOR_RANGE,
  RUN_FIGURE_KINDS,
  render,
  renderAll,
  renderEnergyDrift,
  renderFgmresHeatmap,
  renderResidualScatter,
  renderSolutionSurface,
  renderStepHistogram,
  renderSweepHeatmap,
} from "./figures.js";
export type { FigureKind, FigureSpec, RenderResult } from "./figures.js";
export { colormap, fmt } from "./svg.js";
