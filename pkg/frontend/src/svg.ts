/**
 * Minimal deterministic SVG builders: fixed canvas, default fonts, no
 * timestamps or randomness, so identical inputs give identical bytes.
 */

export const WIDTH = 800;
export const HEIGHT = 600;
export const MARGIN = { left: 80, right: 30, top: 50, bottom: 60 };

export interface Scale {
  (value: number): number;
  ticks: number[];
  label: (v: number) => string;
}

function fmt(x: number): string {
  // fixed short representation; avoids locale and exponent jitter
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 0.01 && abs < 10000) {
    return String(Number(x.toPrecision(6)));
  }
  return x.toExponential(2);
}

export function coord(x: number): string {
  return x.toFixed(2);
}

export function linearScale(lo: number, hi: number, outLo: number,
                            outHi: number, nTicks = 6): Scale {
  const span = hi - lo || 1;
  const scale = ((value: number) =>
    outLo + ((value - lo) / span) * (outHi - outLo)) as Scale;
  const step = span / (nTicks - 1);
  scale.ticks = Array.from({ length: nTicks }, (_, i) => lo + i * step);
  scale.label = fmt;
  return scale;
}

export function logScale(lo: number, hi: number, outLo: number,
                         outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const scale = ((value: number) =>
    outLo + ((Math.log10(value) - llo) / span) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.floor(llo); e <= Math.ceil(lhi); e++) {
    const t = 10 ** e;
    if (t >= lo / 1.001 && t <= hi * 1.001) ticks.push(t);
  }
  if (ticks.length < 2) ticks.push(lo, hi);
  scale.ticks = ticks;
  scale.label = (v) => v.toExponential(0);
  return scale;
}

export const PALETTE = ["#1965b0", "#dc050c", "#4eb265", "#f7943d",
                        "#882e72", "#777777"];

export class Svg {
  private parts: string[] = [];

  constructor(public title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="28" text-anchor="middle" ` +
      `font-size="18">${escapeXml(title)}</text>`,
    );
  }

  polyline(points: [number, number][], color: string, dash = ""): void {
    const attr = dash ? ` stroke-dasharray="${dash}"` : "";
    const path = points.map(([x, y]) => `${coord(x)},${coord(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" ` +
      `stroke-width="1.8"${attr}/>`);
  }

  circle(x: number, y: number, color: string, r = 3.2): void {
    this.parts.push(
      `<circle cx="${coord(x)}" cy="${coord(y)}" r="${r}" fill="${color}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${coord(x)}" y="${coord(y)}" width="${coord(w)}" ` +
      `height="${coord(h)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, size = 13,
       anchor = "start", color = "#111111"): void {
    this.parts.push(
      `<text x="${coord(x)}" y="${coord(y)}" font-size="${size}" ` +
      `text-anchor="${anchor}" fill="${color}">${escapeXml(content)}</text>`);
  }

  axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string): void {
    const { left, right, top, bottom } = MARGIN;
    const x0 = left, x1 = WIDTH - right;
    const y0 = HEIGHT - bottom, y1 = top;
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
    for (const t of xs.ticks) {
      const px = xs(t);
      this.parts.push(
        `<line x1="${coord(px)}" y1="${y0}" x2="${coord(px)}" ` +
        `y2="${y0 + 5}" stroke="#333"/>`);
      this.text(px, y0 + 20, xs.label(t), 12, "middle");
    }
    for (const t of ys.ticks) {
      const py = ys(t);
      this.parts.push(
        `<line x1="${x0 - 5}" y1="${coord(py)}" x2="${x0}" ` +
        `y2="${coord(py)}" stroke="#333"/>`);
      this.text(x0 - 8, py + 4, ys.label(t), 12, "end");
    }
    this.text((x0 + x1) / 2, HEIGHT - 15, xlabel, 14, "middle");
    this.parts.push(
      `<text x="20" y="${(y0 + y1) / 2}" font-size="14" ` +
      `text-anchor="middle" transform="rotate(-90 20 ${(y0 + y1) / 2})">` +
      `${escapeXml(ylabel)}</text>`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Small fixed color ramp for heatmaps (dark blue to yellow). */
export function heatColor(v: number): string {
  const stops: [number, number, number][] = [
    [13, 8, 135], [126, 3, 168], [204, 71, 120], [248, 149, 64],
    [240, 249, 33],
  ];
  const clamped = Math.min(Math.max(v, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(clamped), stops.length - 2);
  const f = clamped - i;
  const mix = stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}
