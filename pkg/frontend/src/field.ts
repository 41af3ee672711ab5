/**
 * Reader for binary field snapshots: one line of UTF-8 JSON (shape, dtype,
 * grid extents, complex-interleave flag) followed by raw row-major
 * little-endian float64 payload.
 */

import { readFileSync } from "node:fs";

export interface FieldHeader {
  shape: number[];
  dtype: string;
  endian: string;
  interleaved_complex: boolean;
  grid: Record<string, unknown>;
  [key: string]: unknown;
}

export interface Field {
  header: FieldHeader;
  /** |value| per sample for complex data, the raw value otherwise. */
  magnitude: Float64Array;
}

export function readField(path: string): Field {
  const raw = readFileSync(path);
  const newline = raw.indexOf(0x0a);
  const header = JSON.parse(raw.subarray(0, newline).toString("utf-8"));
  // copy to an 8-byte-aligned buffer: the payload starts right after the
  // variable-length header line
  const payload = new Uint8Array(raw.subarray(newline + 1));
  const doubles = new Float64Array(payload.buffer, 0,
                                   payload.byteLength / 8);
  if (!header.interleaved_complex) {
    return { header, magnitude: Float64Array.from(doubles) };
  }
  const magnitude = new Float64Array(doubles.length / 2);
  for (let i = 0; i < magnitude.length; i++) {
    const re = doubles[2 * i];
    const im = doubles[2 * i + 1];
    magnitude[i] = Math.hypot(re, im);
  }
  return { header, magnitude };
}
