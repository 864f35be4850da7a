/** Readers for the run-directory formats emitted by the hbvm CLI. */

import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

export class DataError extends Error {}

export interface StepRow {
  stepIndex: number;
  t: number;
  hUsed: number;
  newtonIters: number;
  warmupIters: number;
  warmupHalvings: number;
  fgmresIters: number[];
  matrixEqIters: number[];
  residualFinal: number;
  energy: number;
  halvingsThisStep: number;
}

export interface NewtonTraceRow {
  stepIndex: number;
  newtonIter: number;
  eta: number;
  fgmresIters: number;
  fgmresResidual: number;
}

export interface SnapshotData {
  times: number[];
  states: number[][];
}

export interface RunDir {
  dir: string;
  config: Record<string, unknown>;
  summary: Record<string, unknown>;
  steps: StepRow[];
  snapshots?: SnapshotData;
  trace?: NewtonTraceRow[];
}

const STEP_COLUMNS = [
  "step_index", "t", "h_used", "newton_iters", "warmup_iters", "warmup_halvings",
  "fgmres_iters", "matrix_eq_iters", "residual_final", "energy", "halvings_this_step",
];

function parseNumber(cell: string, file: string, line: number, column: string): number {
  const value = Number(cell);
  if (cell === "" || Number.isNaN(value)) {
    throw new DataError(`${file}:${line}: malformed value ${JSON.stringify(cell)} in column ${column}`);
  }
  return value;
}

export function parseIntList(cell: string, file: string, line: number, column: string): number[] {
  if (cell === "") return [];
  return cell.split(";").map((piece) => parseNumber(piece, file, line, column));
}

export function parseStepsCsv(path: string): StepRow[] {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) throw new DataError(`${path}:1: empty steps file`);
  const header = lines[0].split(",");
  for (const column of STEP_COLUMNS) {
    if (!header.includes(column)) {
      throw new DataError(`${path}:1: missing column ${column}`);
    }
  }
  const idx = Object.fromEntries(header.map((name, i) => [name, i]));
  const rows: StepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new DataError(`${path}:${i + 1}: expected ${header.length} cells, found ${cells.length}`);
    }
    const cell = (name: string) => cells[idx[name]];
    const num = (name: string) => parseNumber(cell(name), path, i + 1, name);
    rows.push({
      stepIndex: num("step_index"),
      t: num("t"),
      hUsed: num("h_used"),
      newtonIters: num("newton_iters"),
      warmupIters: num("warmup_iters"),
      warmupHalvings: num("warmup_halvings"),
      fgmresIters: parseIntList(cell("fgmres_iters"), path, i + 1, "fgmres_iters"),
      matrixEqIters: parseIntList(cell("matrix_eq_iters"), path, i + 1, "matrix_eq_iters"),
      residualFinal: num("residual_final"),
      energy: num("energy"),
      halvingsThisStep: num("halvings_this_step"),
    });
  }
  return rows;
}

export function parseSnapshotsCsv(path: string): SnapshotData {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  const times: number[] = [];
  const states: number[][] = [];
  let width = -1;
  lines.forEach((line, i) => {
    const cells = line.split(",");
    if (cells.length < 2) throw new DataError(`${path}:${i + 1}: snapshot row needs t plus state`);
    if (width === -1) width = cells.length;
    if (cells.length !== width) {
      throw new DataError(`${path}:${i + 1}: expected ${width} cells, found ${cells.length}`);
    }
    times.push(parseNumber(cells[0], path, i + 1, "t"));
    states.push(cells.slice(1).map((c, j) => parseNumber(c, path, i + 1, `state[${j}]`)));
  });
  return { times, states };
}

export function parseNewtonTrace(path: string): NewtonTraceRow[] {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  const expected = "step_index,newton_iter,eta,fgmres_iters,fgmres_residual";
  if (lines[0] !== expected) {
    throw new DataError(`${path}:1: expected header ${expected}`);
  }
  return lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== 5) {
      throw new DataError(`${path}:${i + 2}: expected 5 cells, found ${cells.length}`);
    }
    return {
      stepIndex: parseNumber(cells[0], path, i + 2, "step_index"),
      newtonIter: parseNumber(cells[1], path, i + 2, "newton_iter"),
      eta: parseNumber(cells[2], path, i + 2, "eta"),
      fgmresIters: parseNumber(cells[3], path, i + 2, "fgmres_iters"),
      fgmresResidual: parseNumber(cells[4], path, i + 2, "fgmres_residual"),
    };
  });
}

export function readJson(path: string): Record<string, unknown> {
  try {
    return JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new DataError(`${path}: ${(err as Error).message}`);
  }
}

export function loadRunDir(dir: string): RunDir {
  const config = readJson(join(dir, "config.json"));
  const summary = readJson(join(dir, "summary.json"));
  const steps = parseStepsCsv(join(dir, "steps.csv"));
  const run: RunDir = { dir, config, summary, steps };
  const snapshots = join(dir, "snapshots.csv");
  if (existsSync(snapshots)) run.snapshots = parseSnapshotsCsv(snapshots);
  const trace = join(dir, "newton_trace.csv");
  if (existsSync(trace)) run.trace = parseNewtonTrace(trace);
  return run;
}

export interface SweepCell {
  dir: string;
  exitCode: number;
  meanMatrixEqIters: number | null;
  config: Record<string, unknown>;
}

export function loadSweepSummary(dir: string): SweepCell[] {
  const raw = readJson(join(dir, "sweep_summary.json")) as {
    cells?: Array<Record<string, unknown>>;
  };
  if (!raw.cells) throw new DataError(`${join(dir, "sweep_summary.json")}: missing "cells"`);
  return raw.cells.map((cell) => ({
    dir: String(cell.dir),
    exitCode: Number(cell.exit_code),
    meanMatrixEqIters: cell.mean_matrix_eq_iters === null ? null : Number(cell.mean_matrix_eq_iters),
    config: cell.config as Record<string, unknown>,
  }));
}
