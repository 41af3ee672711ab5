/**
 * render --spec PATH --out DIR
 *
 * The spec file is JSON: either one figure spec or an array of them. Paths
 * inside the spec resolve relative to the spec file's directory.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, isAbsolute, join, resolve } from "node:path";
import { FigureSpec, render, validateSpec } from "./figures.js";

function usage(): never {
  console.error("usage: render --spec PATH --out DIR");
  process.exit(2);
}

export function main(argv: string[]): number {
  if (argv.length < 1 || argv[0] !== "render") usage();
  let specPath = "";
  let outDir = "out";
  for (let i = 1; i < argv.length; i += 2) {
    if (argv[i] === "--spec") specPath = argv[i + 1];
    else if (argv[i] === "--out") outDir = argv[i + 1];
    else usage();
  }
  if (!specPath) usage();

  let specs: FigureSpec[];
  try {
    const raw = JSON.parse(readFileSync(specPath, "utf-8"));
    specs = (Array.isArray(raw) ? raw : [raw]).map(validateSpec);
  } catch (err) {
    console.error(`bad figure spec: ${(err as Error).message}`);
    return 2;
  }

  mkdirSync(outDir, { recursive: true });
  const base = dirname(resolve(specPath));
  for (const spec of specs) {
    const input = isAbsolute(spec.input) ? spec.input : join(base, spec.input);
    try {
      const svg = render({ ...spec, input });
      const target = join(outDir, spec.output);
      writeFileSync(target, svg, "utf-8");
      console.log(`wrote ${target}`);
    } catch (err) {
      console.error(`${(err as Error).name}: ${(err as Error).message}`);
      return 1;
    }
  }
  return 0;
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("cli.js") || invoked.endsWith("cli.ts")) {
  process.exit(main(process.argv.slice(2)));
}
