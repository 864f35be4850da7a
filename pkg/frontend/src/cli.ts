#!/usr/bin/env node
/** Figure rendering CLI.
 *
 *   hbvm-render render --spec <figure-spec.json>
 *   hbvm-render render --all <run_dir> [--out <dir>]
 */

import { readFileSync } from "node:fs";

import { DataError } from "./data.js";
import { FigureSpec, render, renderAll } from "./figures.js";

function usage(): string {
  return "usage: render --spec <spec.json> | render --all <run_dir> [--out <dir>]";
}

export function main(argv: string[]): number {
  const args = [...argv];
  if (args[0] === "render") args.shift();
  try {
    if (args[0] === "--spec") {
      if (!args[1]) throw new DataError("--spec needs a file path");
      const spec = JSON.parse(readFileSync(args[1], "utf8")) as FigureSpec | FigureSpec[];
      const specs = Array.isArray(spec) ? spec : [spec];
      for (const s of specs) {
        const result = render(s);
        console.log(`wrote ${result.path}`);
      }
      return 0;
    }
    if (args[0] === "--all") {
      if (!args[1]) throw new DataError("--all needs a run directory");
      const outIdx = args.indexOf("--out");
      const out = outIdx >= 0 ? args[outIdx + 1] : undefined;
      const results = renderAll(args[1], out);
      for (const result of results) console.log(`wrote ${result.path}`);
      return 0;
    }
    console.error(usage());
    return 2;
  } catch (err) {
    if (err instanceof DataError || err instanceof SyntaxError) {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("hbvm-render");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
