/**
 * Reader for the laboratory's CSV contract: an optional single `#` comment
 * line carrying `key=value` metadata, a header row, then numeric rows with
 * 17-significant-digit decimals and LF endings.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { EmptyInput, MissingColumn } from "./errors.js";

export interface Table {
  path: string;
  header: string[];
  rows: (number | string)[][];
  meta: Record<string, string>;
}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf-8");
  const meta: Record<string, string> = {};
  const lines = text.split("\n").filter((line) => line.length > 0);
  let body = lines;
  if (lines.length > 0 && lines[0].startsWith("#")) {
    for (const token of lines[0].slice(1).trim().split(/\s+/)) {
      const eq = token.indexOf("=");
      if (eq > 0) meta[token.slice(0, eq)] = token.slice(eq + 1);
    }
    body = lines.slice(1);
  }
  const parsed = Papa.parse<string[]>(body.join("\n"), {
    skipEmptyLines: true,
  });
  if (parsed.data.length === 0) throw new EmptyInput(path);
  const header = parsed.data[0].map((h) => h.trim());
  const rows = parsed.data.slice(1).map((row) =>
    row.map((cell) => {
      const value = Number(cell);
      return Number.isNaN(value) && cell !== "nan" ? cell : value;
    }),
  );
  if (rows.length === 0) throw new EmptyInput(path);
  return { path, header, rows, meta };
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new MissingColumn(name, table.path);
  return table.rows.map((row) => Number(row[idx]));
}

/** Distinct values of a column, in first-appearance order. */
export function distinct(values: number[]): number[] {
  const seen: number[] = [];
  for (const v of values) if (!seen.includes(v)) seen.push(v);
  return seen;
}
