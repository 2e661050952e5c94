#!/usr/bin/env node
/** figures render --fig <id> --in <dir> --out <dir>
 *
 *  Reads the simulator's CSV outputs from --in and writes <id>.svg to --out.
 *  Rendering is read-only over the inputs; the output is written to a
 *  temporary file and renamed, so reruns overwrite atomically and a failed
 *  render leaves no partial file.  Exits nonzero on any schema mismatch or
 *  empty input.
 */

import { mkdirSync, renameSync, writeFileSync } from "fs";
import { join } from "path";
import { RENDERERS } from "./figures.js";

function parseArgs(argv: string[]): { fig: string; inDir: string; outDir: string } {
  if (argv[0] !== "render") {
    throw new Error(`unknown command ${argv[0] ?? "(none)"}; usage: figures render --fig <id> --in <dir> --out <dir>`);
  }
  const opts: Record<string, string> = {};
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed option near ${key}`);
    }
    opts[key.slice(2)] = value;
  }
  for (const required of ["fig", "in", "out"]) {
    if (!(required in opts)) throw new Error(`missing --${required}`);
  }
  return { fig: opts.fig, inDir: opts.in, outDir: opts.out };
}

export function render(fig: string, inDir: string, outDir: string): string {
  const renderer = RENDERERS[fig];
  if (!renderer) {
    throw new Error(`unknown figure id ${fig}; known: ${Object.keys(RENDERERS).join(", ")}`);
  }
  const svg = renderer(inDir);
  mkdirSync(outDir, { recursive: true });
  const target = join(outDir, `${fig}.svg`);
  const tmp = `${target}.tmp`;
  writeFileSync(tmp, svg);
  renameSync(tmp, target);
  return target;
}

export function main(argv: string[]): number {
  try {
    const { fig, inDir, outDir } = parseArgs(argv);
    const target = render(fig, inDir, outDir);
    console.log(`wrote ${target}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  process.exit(main(process.argv.slice(2)));
}
