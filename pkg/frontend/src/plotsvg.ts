/** SVG fragments for the live charts; same geometry as the batch plots. */

import type { PlotSeries } from "./viewmodel.js";

export const WIDTH = 640;
export const HEIGHT = 400;
export const MARGIN = 48;

export interface Bounds {
  t0: number;
  t1: number;
  v0: number;
  v1: number;
}

export function boundsOf(seriesList: PlotSeries[], loPad = 0): Bounds | null {
  let t0 = Infinity;
  let t1 = -Infinity;
  let v0 = loPad;
  let v1 = -Infinity;
  for (const s of seriesList) {
    for (const p of s.points) {
      t0 = Math.min(t0, p.t);
      t1 = Math.max(t1, p.t);
      v0 = Math.min(v0, p.v);
      v1 = Math.max(v1, p.v);
    }
  }
  if (!isFinite(t0)) return null;
  if (t1 <= t0) t1 = t0 + 1;
  if (v1 <= v0) v1 = v0 + 1;
  return { t0, t1, v0, v1 };
}

export function toXY(b: Bounds, t: number, v: number): [number, number] {
  const sx = (WIDTH - 2 * MARGIN) / (b.t1 - b.t0);
  const sy = (HEIGHT - 2 * MARGIN) / (b.v1 - b.v0);
  return [MARGIN + (t - b.t0) * sx, HEIGHT - MARGIN - (v - b.v0) * sy];
}

/** Staircase path for window-style series: hold each value until the next. */
export function stepPath(s: PlotSeries, b: Bounds): string {
  if (s.points.length === 0) return "";
  const parts: string[] = [];
  let [x, y] = toXY(b, s.points[0].t, s.points[0].v);
  parts.push(`M${x.toFixed(1)} ${y.toFixed(1)}`);
  for (let i = 1; i < s.points.length; i++) {
    const [nx, ny] = toXY(b, s.points[i].t, s.points[i].v);
    parts.push(`H${nx.toFixed(1)}`, `V${ny.toFixed(1)}`);
    x = nx;
    y = ny;
  }
  return parts.join(" ");
}

/** Dot markers for sequence-number series. */
export function dotCircles(s: PlotSeries, b: Bounds, r = 2): string {
  const out: string[] = [];
  for (const p of s.points) {
    const [x, y] = toXY(b, p.t, p.v);
    out.push(
      `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${r}" fill="${s.color}"/>`,
    );
  }
  return out.join("");
}

export function axes(b: Bounds | null, xlabel: string, ylabel: string): string {
  const parts = [
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<line x1="${MARGIN}" y1="${HEIGHT - MARGIN}" x2="${WIDTH - MARGIN}" y2="${HEIGHT - MARGIN}" stroke="black"/>`,
    `<line x1="${MARGIN}" y1="${MARGIN}" x2="${MARGIN}" y2="${HEIGHT - MARGIN}" stroke="black"/>`,
    `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" font-size="12" text-anchor="middle">${xlabel}</text>`,
    `<text x="14" y="${HEIGHT / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 ${HEIGHT / 2})">${ylabel}</text>`,
  ];
  if (b) {
    for (let i = 0; i < 5; i++) {
      const ft = b.t0 + ((b.t1 - b.t0) * i) / 4;
      const fv = b.v0 + ((b.v1 - b.v0) * i) / 4;
      const [x] = toXY(b, ft, b.v0);
      const [, y] = toXY(b, b.t0, fv);
      parts.push(
        `<text x="${x.toFixed(1)}" y="${HEIGHT - MARGIN + 16}" font-size="10" text-anchor="middle">${ft.toPrecision(4)}</text>`,
        `<text x="${MARGIN - 6}" y="${y.toFixed(1)}" font-size="10" text-anchor="end">${fv.toPrecision(4)}</text>`,
      );
    }
  }
  return parts.join("");
}
