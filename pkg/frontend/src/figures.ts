/**
 * Figure renderers. Every annotation that states a slope is copied verbatim
 * from the CSV's slope column: rendering never recomputes physics.
 */

import { column, distinct, readTable, Table } from "./csv.js";
import { readField } from "./field.js";
import { EmptyInput, MissingColumn } from "./errors.js";
import {
  HEIGHT, MARGIN, PALETTE, Svg, WIDTH, heatColor, linearScale, logScale,
} from "./svg.js";

export interface FigureSpec {
  kind: "loglog-slope" | "heatmap" | "decay-fit" | "drift-snapshots";
  input: string;
  output: string;
  title?: string;
  xlabel?: string;
  ylabel?: string;
  /** column names for the loglog kind */
  x?: string;
  y?: string;
  group?: string;
  slope_column?: string;
  reference_slopes?: number[];
}

const X0 = MARGIN.left;
const X1 = WIDTH - MARGIN.right;
const Y0 = HEIGHT - MARGIN.bottom;
const Y1 = MARGIN.top;

function bounds(values: number[], positive = false): [number, number] {
  const kept = positive ? values.filter((v) => v > 0) : values;
  return [Math.min(...kept), Math.max(...kept)];
}

export function render(spec: FigureSpec): string {
  switch (spec.kind) {
    case "loglog-slope":
      return renderLogLog(spec);
    case "heatmap":
      return renderHeatmap(spec);
    case "decay-fit":
      return renderDecayFit(spec);
    case "drift-snapshots":
      return renderDrift(spec);
  }
}

function renderLogLog(spec: FigureSpec): string {
  const table = readTable(spec.input);
  const xName = spec.x ?? "eps";
  const yName = spec.y ?? "error";
  const xs = column(table, xName);
  const ys = column(table, yName);
  const groups = spec.group ? distinct(column(table, spec.group)) : [NaN];
  const groupCol = spec.group ? column(table, spec.group) : xs.map(() => NaN);
  const slopes = spec.slope_column ? column(table, spec.slope_column) : null;

  const svg = new Svg(spec.title ?? `${yName} vs ${xName}`);
  const [xlo, xhi] = bounds(xs, true);
  const [ylo, yhi] = bounds(ys, true);
  const sx = logScale(xlo, xhi, X0, X1);
  const sy = logScale(ylo / 1.5, yhi * 1.5, Y0, Y1);
  svg.axes(sx, sy, spec.xlabel ?? xName, spec.ylabel ?? yName);

  groups.forEach((g, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const idx = xs.map((_, i) => i).filter(
      (i) => !spec.group || groupCol[i] === g);
    const pts = idx
      .filter((i) => xs[i] > 0 && ys[i] > 0)
      .sort((a, b) => xs[a] - xs[b])
      .map((i): [number, number] => [sx(xs[i]), sy(ys[i])]);
    svg.polyline(pts, color);
    for (const [px, py] of pts) svg.circle(px, py, color);
    const label = spec.group ? `${spec.group}=${g}` : yName;
    if (slopes && idx.length > 0) {
      // annotated slope is the CSV value, never re-derived here
      const slope = slopes[idx[0]];
      svg.text(X0 + 12, Y1 + 18 + 17 * gi,
               `${label}: slope ${slope}`, 13, "start", color);
    } else {
      svg.text(X0 + 12, Y1 + 18 + 17 * gi, label, 13, "start", color);
    }
  });

  (spec.reference_slopes ?? []).forEach((slope, ri) => {
    // anchor the reference line at the first group's last point
    const anchorX = xhi;
    const anchorY = yhi;
    const pts: [number, number][] = [xlo, xhi].map((x): [number, number] => [
      sx(x), sy(anchorY * (x / anchorX) ** slope)]);
    svg.polyline(pts, "#999999", "6 4");
    svg.text(sx(xlo) + 4, sy(anchorY * (xlo / anchorX) ** slope) - 6,
             `reference slope ${slope}`, 12, "start", "#777777");
    void ri;
  });
  return svg.render();
}

function renderHeatmap(spec: FigureSpec): string {
  const field = readField(spec.input);
  const [rows, cols] = [field.header.shape[0],
                        field.header.shape.length > 1
                          ? field.header.shape[1] : 1];
  // square planar snapshots are stored flattened; recover n x n layout
  const n = field.header.shape.length === 1
    ? Math.round(Math.sqrt(rows)) : rows;
  const m = field.header.shape.length === 1 ? n : cols;
  const data = field.magnitude;
  if (data.length === 0) throw new EmptyInput(spec.input);
  let peak = 0;
  for (const v of data) peak = Math.max(peak, v);
  if (peak === 0) peak = 1;

  const svg = new Svg(spec.title ?? "field magnitude");
  const cw = (X1 - X0) / m;
  const ch = (Y0 - Y1) / n;
  const stride = Math.max(1, Math.floor(Math.max(n, m) / 160));
  for (let i = 0; i < n; i += stride) {
    for (let j = 0; j < m; j += stride) {
      const v = data[i * m + j] / peak;
      svg.rect(X0 + (j / m) * (X1 - X0), Y1 + (i / n) * (Y0 - Y1),
               cw * stride + 0.5, ch * stride + 0.5, heatColor(v));
    }
  }
  svg.text(X0, Y0 + 30, `peak magnitude ${peak.toExponential(3)}`, 13);
  return svg.render();
}

function renderDecayFit(spec: FigureSpec): string {
  // long-format table: series, member, x, value
  const table = readTable(spec.input);
  const names = table.rows.map((r) => String(r[0]));
  const xsAll = column(table, "x");
  const valsAll = column(table, "value");
  const pick = (name: string) =>
    table.rows.map((_, i) => i).filter((i) => names[i] === name);

  const annuli = pick("annulus_logmean");
  if (annuli.length === 0) throw new EmptyInput(spec.input);
  const xs = annuli.map((i) => xsAll[i]);
  const ys = annuli.map((i) => valsAll[i]);
  const svg = new Svg(spec.title ?? "radial decay profile");
  const sx = linearScale(Math.min(...xs), Math.max(...xs), X0, X1);
  const sy = linearScale(Math.min(...ys), Math.max(...ys), Y0, Y1);
  svg.axes(sx, sy, spec.xlabel ?? "radius", spec.ylabel ?? "log mean |chi|");
  const pts = xs.map((x, i): [number, number] => [sx(x), sy(ys[i])]);
  svg.polyline(pts, PALETTE[0]);
  pts.forEach(([px, py]) => svg.circle(px, py, PALETTE[0]));

  let line = 0;
  for (const name of ["decay_rate", "gaussian_rate", "boundary_mass"]) {
    const idx = pick(name);
    if (idx.length > 0) {
      svg.text(X0 + 12, Y1 + 18 + 17 * line,
               `${name}: ${valsAll[idx[0]]}`, 13, "start", "#333333");
      line += 1;
    }
  }
  return svg.render();
}

function renderDrift(spec: FigureSpec): string {
  const table = readTable(spec.input);
  const ts = column(table, "t");
  const peaks = column(table, "z_peak");
  const preds = column(table, "z_drift_prediction");
  const svg = new Svg(spec.title ?? "packet drift");
  const sx = linearScale(0, Math.max(...ts) * 1.05, X0, X1);
  const all = [...peaks, ...preds, 0];
  const sy = linearScale(Math.min(...all), Math.max(...all) * 1.1, Y0, Y1);
  svg.axes(sx, sy, spec.xlabel ?? "t", spec.ylabel ?? "z");
  svg.polyline(ts.map((t, i): [number, number] =>
    [sx(t), sy(preds[i])]), PALETTE[1], "6 4");
  ts.forEach((t, i) => svg.circle(sx(t), sy(peaks[i]), PALETTE[0]));
  svg.text(X0 + 12, Y1 + 18, "markers: synthesized peak", 13, "start",
           PALETTE[0]);
  svg.text(X0 + 12, Y1 + 35, "dashed: drift prediction", 13, "start",
           PALETTE[1]);
  return svg.render();
}

export function validateSpec(raw: unknown): FigureSpec {
  const spec = raw as Partial<FigureSpec>;
  const kinds = ["loglog-slope", "heatmap", "decay-fit", "drift-snapshots"];
  if (!spec.kind || !kinds.includes(spec.kind)) {
    throw new Error(`figure kind must be one of ${kinds.join(", ")}`);
  }
  if (!spec.input) throw new Error("figure spec needs an input path");
  if (!spec.output) throw new Error("figure spec needs an output name");
  return spec as FigureSpec;
}

export { MissingColumn, EmptyInput };
