/** The six figure kinds rendered from run/sweep directories.
 *
 * Every renderer is a pure function of the loaded data and returns the
 * SVG string together with the numbers a test (or caller) would want to
 * cross-check; color scales are fixed per kind so different runs are
 * visually comparable.
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";

import {
  DataError,
  RunDir,
  SweepCell,
  loadRunDir,
  loadSweepSummary,
} from "./data.js";
import {
  DEFAULT_FRAME,
  Frame,
  axes,
  colorbar,
  colormap,
  document,
  el,
  fmt,
  linearScale,
  logTicks,
  niceTicks,
  text,
} from "./svg.js";

export type FigureKind =
  | "sweep-heatmap"
  | "step-histogram"
  | "fgmres-heatmap"
  | "residual-scatter"
  | "energy-drift"
  | "solution-surface";

export interface FigureSpec {
  kind: FigureKind;
  /** run directory (all kinds except sweep-heatmap) or sweep root */
  input: string;
  output: string;
  title?: string;
}

export interface RenderResult {
  path: string;
  svg: string;
  meta: Record<string, number>;
}

/** Values below this floor are plotted at the floor on log axes. */
export const ENERGY_FLOOR = 1e-15;

/** Fixed per-kind color ranges (comparable across runs). */
export const FIXED_COLOR_RANGE: Record<string, [number, number]> = {
  "fgmres-heatmap": [0, 10],
  "sweep-heatmap": [0, 30],
  "solution-surface": [-1, 1],
};

function plotArea(frame: Frame) {
  return {
    x0: frame.left,
    x1: frame.width - frame.right,
    y0: frame.height - frame.bottom,
    y1: frame.top,
  };
}

export function renderEnergyDrift(run: RunDir, title = "relative energy drift"): RenderResult {
  const frame = DEFAULT_FRAME;
  const { x0, x1, y0, y1 } = plotArea(frame);
  const h0 = Number(run.summary.initial_energy ?? run.steps[0]?.energy ?? 0);
  const drifts = run.steps.map((s) => {
    const raw = h0 !== 0 ? Math.abs(s.energy - h0) / Math.abs(h0) : Math.abs(s.energy);
    return Math.max(raw, ENERGY_FLOOR);
  });
  const times = run.steps.map((s) => s.t);
  const hi = Math.max(...drifts, 1e-14);
  const sx = linearScale(0, Math.max(...times, 1e-300), x0, x1);
  const sy = linearScale(Math.log10(ENERGY_FLOOR), Math.log10(hi), y0, y1);
  const pts = run.steps.map((s, i) => `${fmt(sx(times[i]))},${fmt(sy(Math.log10(drifts[i])))}`);
  const body = [
    ...axes(
      frame,
      niceTicks(0, Math.max(...times, 1e-300)).map((v) => [sx(v), fmt(v)] as [number, string]),
      logTicks(ENERGY_FLOOR, hi).map((v) => [sy(Math.log10(v)), `1e${Math.round(Math.log10(v))}`] as [number, string]),
      "t",
      "|H - H0| / |H0|",
    ),
    el("polyline", { points: pts.join(" "), fill: "none", stroke: "#2166ac", "stroke-width": 1.2 }),
  ];
  const svg = document(frame, body, title);
  return { path: "", svg, meta: { maxDrift: Math.max(...drifts), floor: ENERGY_FLOOR } };
}

export function renderStepHistogram(run: RunDir, title = "Newton iterations per step"): RenderResult {
  const frame = DEFAULT_FRAME;
  const { x0, x1, y0, y1 } = plotArea(frame);
  const counts = run.steps.map((s) => s.newtonIters);
  const hiCount = Math.max(...counts, 1);
  const sx = linearScale(0, run.steps.length, x0, x1);
  const sy = linearScale(0, hiCount, y0, y1);
  const barWidth = Math.max(0.5, (x1 - x0) / Math.max(run.steps.length, 1) - 0.25);
  const bars = run.steps.map((s, i) =>
    el("rect", {
      x: sx(i),
      y: sy(s.newtonIters),
      width: barWidth,
      height: Math.max(0, y0 - sy(s.newtonIters)),
      fill: "#666666",
    }),
  );
  // final Newton residual per step on a log right axis, as a polyline
  const residuals = run.steps.map((s) => Math.max(s.residualFinal, ENERGY_FLOOR));
  const rHi = Math.max(...residuals);
  const rLo = Math.min(...residuals);
  const sr = linearScale(Math.log10(rLo), Math.log10(rHi <= rLo ? rLo * 10 : rHi), y0, y1);
  const resPts = run.steps.map((s, i) => `${fmt(sx(i) + barWidth / 2)},${fmt(sr(Math.log10(residuals[i])))}`);
  const body = [
    ...axes(
      frame,
      niceTicks(0, run.steps.length).map((v) => [sx(v), fmt(v)] as [number, string]),
      niceTicks(0, hiCount).map((v) => [sy(v), fmt(v)] as [number, string]),
      "time step",
      "Newton iterations",
    ),
    ...bars,
    el("polyline", { points: resPts.join(" "), fill: "none", stroke: "#b2182b", "stroke-width": 1 }),
    text(x1 + 6, y1 + 10, `residual [${fmt(rLo)}, ${fmt(rHi)}]`, { fill: "#b2182b" }),
  ];
  const svg = document(frame, body, title);
  return { path: "", svg, meta: { maxNewton: hiCount, maxResidual: rHi } };
}

export function renderFgmresHeatmap(run: RunDir, title = "FGMRES iterations per Newton step"): RenderResult {
  const frame = DEFAULT_FRAME;
  const { x0, x1, y0, y1 } = plotArea(frame);
  const [lo, hi] = FIXED_COLOR_RANGE["fgmres-heatmap"];
  const maxNewton = Math.max(...run.steps.map((s) => s.fgmresIters.length), 1);
  const cellW = (x1 - x0) / Math.max(run.steps.length, 1);
  const cellH = (y0 - y1) / maxNewton;
  const cells: string[] = [];
  let maxSeen = 0;
  run.steps.forEach((s, i) => {
    s.fgmresIters.forEach((iters, p) => {
      maxSeen = Math.max(maxSeen, iters);
      cells.push(
        el("rect", {
          x: x0 + i * cellW,
          y: y0 - (p + 1) * cellH,
          width: cellW + 0.3,
          height: cellH + 0.3,
          fill: colormap(iters, lo, hi),
        }),
      );
    });
  });
  const body = [
    ...cells,
    ...axes(
      frame,
      niceTicks(0, run.steps.length).map((v) => [x0 + v * cellW, fmt(v)] as [number, string]),
      niceTicks(0, maxNewton, Math.min(maxNewton, 6)).map(
        (v) => [y0 - v * cellH, fmt(v)] as [number, string],
      ),
      "time step",
      "Newton iteration",
    ),
    ...colorbar(frame, lo, hi, "FGMRES iterations"),
  ];
  const svg = document(frame, body, title);
  return { path: "", svg, meta: { maxFgmres: maxSeen, colorLo: lo, colorHi: hi } };
}

export function renderResidualScatter(run: RunDir, title = "FGMRES targets and residuals"): RenderResult {
  const frame = DEFAULT_FRAME;
  const { x0, x1, y0, y1 } = plotArea(frame);
  // per-Newton forcing targets when the run carried a newton_trace.csv,
  // otherwise the per-step final residuals
  const points: Array<{ step: number; target: number; achieved: number }> = run.trace
    ? run.trace.map((r) => ({ step: r.stepIndex, target: r.eta, achieved: r.fgmresResidual }))
    : run.steps.map((s) => ({ step: s.stepIndex, target: s.residualFinal, achieved: s.residualFinal }));
  const values = points.flatMap((p) => [p.target, p.achieved]).map((v) => Math.max(v, ENERGY_FLOOR));
  const lo = Math.min(...values, 1e-12);
  const hi = Math.max(...values, 1.0);
  const nSteps = Math.max(run.steps.length, 1);
  const sx = linearScale(0, nSteps, x0, x1);
  const sy = linearScale(Math.log10(lo), Math.log10(hi), y0, y1);
  const marks = points.flatMap((p) => [
    el("circle", {
      cx: sx(p.step), cy: sy(Math.log10(Math.max(p.target, ENERGY_FLOOR))), r: 1.6,
      fill: "#2166ac", "fill-opacity": 0.7,
    }),
    el("circle", {
      cx: sx(p.step), cy: sy(Math.log10(Math.max(p.achieved, ENERGY_FLOOR))), r: 1.6,
      fill: "#b2182b", "fill-opacity": 0.7,
    }),
  ]);
  const body = [
    ...axes(
      frame,
      niceTicks(0, nSteps).map((v) => [sx(v), fmt(v)] as [number, string]),
      logTicks(lo, hi).map((v) => [sy(Math.log10(v)), `1e${Math.round(Math.log10(v))}`] as [number, string]),
      "time step",
      "FGMRES relative residual",
    ),
    ...marks,
    text(x1 + 6, y1 + 10, "target", { fill: "#2166ac" }),
    text(x1 + 6, y1 + 24, "achieved", { fill: "#b2182b" }),
  ];
  const svg = document(frame, body, title);
  return { path: "", svg, meta: { points: points.length } };
}

export function renderSolutionSurface(run: RunDir, title = "displacement u(x, t)"): RenderResult {
  if (!run.snapshots || run.snapshots.times.length === 0) {
    throw new DataError(`${run.dir}: solution-surface needs snapshots.csv`);
  }
  const frame = DEFAULT_FRAME;
  const { x0, x1, y0, y1 } = plotArea(frame);
  const { times, states } = run.snapshots;
  const dim = states[0].length;
  const m = Math.floor(dim / 2);
  const problem = String(run.config.problem ?? "");
  const L = Number(run.config.L ?? 1);
  const N = Number(run.config.N ?? m + 1);
  const xNodes = Array.from({ length: m }, (_, j) =>
    problem === "semilinear-wave" ? -L + ((j + 1) * 2 * L) / N : ((j + 1) * L) / N,
  );
  const [lo, hi] = FIXED_COLOR_RANGE["solution-surface"];
  const cellW = (x1 - x0) / times.length;
  const cellH = (y0 - y1) / m;
  const cells: string[] = [];
  let uMin = Infinity;
  let uMax = -Infinity;
  states.forEach((state, i) => {
    for (let j = 0; j < m; j++) {
      const u = state[j];
      uMin = Math.min(uMin, u);
      uMax = Math.max(uMax, u);
      cells.push(
        el("rect", {
          x: x0 + i * cellW,
          y: y0 - (j + 1) * cellH,
          width: cellW + 0.3,
          height: cellH + 0.3,
          fill: colormap(u, lo, hi),
        }),
      );
    }
  });
  const xTickIdx = niceTicks(0, times.length - 1, 6).map((i) => Math.min(Math.round(i), times.length - 1));
  const body = [
    ...cells,
    ...axes(
      frame,
      xTickIdx.map((i) => [x0 + (i + 0.5) * cellW, fmt(times[i])] as [number, string]),
      niceTicks(0, m - 1, 5).map((j) => {
        const jj = Math.min(Math.round(j), m - 1);
        return [y0 - (jj + 0.5) * cellH, fmt(xNodes[jj])] as [number, string];
      }),
      "t",
      "x",
    ),
    ...colorbar(frame, lo, hi, "u"),
  ];
  const svg = document(frame, body, title);
  return { path: "", svg, meta: { snapshots: times.length, uMin, uMax } };
}

export function renderSweepHeatmap(cells: SweepCell[], title = "mean matrix-equation iterations"): RenderResult {
  const valid = cells.filter((c) => c.meanMatrixEqIters !== null);
  if (valid.length === 0) throw new DataError("sweep-heatmap: no converged cells");
  const Ns = [...new Set(valid.map((c) => Number(c.config.N)))].sort((a, b) => a - b);
  const ss = [...new Set(valid.map((c) => Number(c.config.s)))].sort((a, b) => a - b);
  const offs = [...new Set(valid.map((c) => Number(c.config.k) - Number(c.config.s)))].sort((a, b) => a - b);
  const [lo, hi] = FIXED_COLOR_RANGE["sweep-heatmap"];

  const panelW = 220;
  const panelH = 200;
  const perRow = Math.min(Ns.length, 3);
  const rows = Math.ceil(Ns.length / perRow);
  const frame: Frame = {
    width: 80 + perRow * (panelW + 30) + 110,
    height: 60 + rows * (panelH + 46) + 30,
    left: 80, right: 110, top: 48, bottom: 40,
  };
  const body: string[] = [];
  let maxSeen = 0;
  Ns.forEach((N, p) => {
    const px = 80 + (p % perRow) * (panelW + 30);
    const py = 60 + Math.floor(p / perRow) * (panelH + 46);
    const cellW = panelW / offs.length;
    const cellH = panelH / ss.length;
    body.push(text(px, py - 6, `N = ${N}`, { "font-weight": "bold" }));
    for (const cell of valid.filter((c) => Number(c.config.N) === N)) {
      const s = Number(cell.config.s);
      const off = Number(cell.config.k) - s;
      const value = cell.meanMatrixEqIters as number;
      maxSeen = Math.max(maxSeen, value);
      const cx = px + offs.indexOf(off) * cellW;
      const cy = py + (ss.length - 1 - ss.indexOf(s)) * cellH;
      body.push(el("rect", { x: cx, y: cy, width: cellW + 0.3, height: cellH + 0.3, fill: colormap(value, lo, hi) }));
      body.push(text(cx + cellW / 2, cy + cellH / 2 + 4, fmt(Math.round(value)), {
        "text-anchor": "middle", fill: "#ffffff", "font-size": 10,
      }));
    }
    offs.forEach((off, i) =>
      body.push(text(px + (i + 0.5) * cellW, py + panelH + 14, fmt(off), { "text-anchor": "middle" })),
    );
    ss.forEach((s, i) =>
      body.push(text(px - 8, py + (ss.length - 1 - i + 0.5) * cellH + 4, fmt(s), { "text-anchor": "end" })),
    );
    body.push(text(px + panelW / 2, py + panelH + 30, "k - s", { "text-anchor": "middle" }));
  });
  body.push(...colorbar(frame, lo, hi, "mean iterations"));
  const svg = document(frame, body, title);
  return { path: "", svg, meta: { panels: Ns.length, maxMean: maxSeen } };
}

export function render(spec: FigureSpec): RenderResult {
  let result: RenderResult;
  if (spec.kind === "sweep-heatmap") {
    result = renderSweepHeatmap(loadSweepSummary(spec.input), spec.title);
  } else {
    const run = loadRunDir(spec.input);
    switch (spec.kind) {
      case "energy-drift":
        result = renderEnergyDrift(run, spec.title);
        break;
      case "step-histogram":
        result = renderStepHistogram(run, spec.title);
        break;
      case "fgmres-heatmap":
        result = renderFgmresHeatmap(run, spec.title);
        break;
      case "residual-scatter":
        result = renderResidualScatter(run, spec.title);
        break;
      case "solution-surface":
        result = renderSolutionSurface(run, spec.title);
        break;
      default:
        throw new DataError(`unknown figure kind ${JSON.stringify(spec.kind)}`);
    }
  }
  mkdirSync(dirname(spec.output), { recursive: true });
  writeFileSync(spec.output, result.svg);
  return { ...result, path: spec.output };
}

export const RUN_FIGURE_KINDS: FigureKind[] = [
  "step-histogram",
  "fgmres-heatmap",
  "residual-scatter",
  "energy-drift",
  "solution-surface",
];

/** Render every applicable kind for a run (or sweep) directory. */
export function renderAll(dir: string, outDir?: string): RenderResult[] {
  const out = outDir ?? join(dir, "figures");
  if (existsSync(join(dir, "sweep_summary.json"))) {
    return [render({ kind: "sweep-heatmap", input: dir, output: join(out, "sweep-heatmap.svg") })];
  }
  const results: RenderResult[] = [];
  for (const kind of RUN_FIGURE_KINDS) {
    if (kind === "solution-surface" && !existsSync(join(dir, "snapshots.csv"))) continue;
    results.push(render({ kind, input: dir, output: join(out, `${kind}.svg`) }));
  }
  return results;
}
