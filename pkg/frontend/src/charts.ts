// Tiny SVG chart builders. Pure string-in/string-out so they are trivially
// testable; the screens drop the markup into innerHTML.

import type { TrajectoryRecord } from "./types";

export interface Series {
  label: string;
  values: { x: number; y: number }[];
  color: string;
}

const WIDTH = 560;
const HEIGHT = 180;
const PAD = 28;

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v) => lo + ((v - min) / span) * (hi - lo);
}

export function polyline(series: Series): string {
  if (series.values.length === 0) return "";
  const sx = scale(series.values.map((p) => p.x), PAD, WIDTH - PAD);
  const sy = scale(series.values.map((p) => p.y), HEIGHT - PAD, PAD);
  const points = series.values
    .map((p) => `${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
    .join(" ");
  return `<polyline fill="none" stroke="${series.color}" stroke-width="1.5" points="${points}"><title>${series.label}</title></polyline>`;
}

export function chartSvg(series: Series[]): string {
  const drawable = series.filter((s) => s.values.length > 0);
  const body = drawable.map(polyline).join("");
  const legend = drawable
    .map(
      (s, i) =>
        `<text x="${PAD + i * 120}" y="14" fill="${s.color}" font-size="11">${s.label}</text>`,
    )
    .join("");
  return `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" class="chart">${legend}${body}</svg>`;
}

export function similarityChart(records: TrajectoryRecord[]): string {
  const series: Series[] = [
    {
      label: "similarity A",
      color: "#2563eb",
      values: records.map((r) => ({ x: r.iter, y: r.sim_a })),
    },
  ];
  if (records.some((r) => r.sim_b !== null)) {
    series.push({
      label: "similarity B",
      color: "#db2777",
      values: records.filter((r) => r.sim_b !== null).map((r) => ({ x: r.iter, y: r.sim_b as number })),
    });
  }
  if (records.some((r) => r.p_a !== null)) {
    series.push({
      label: "p_A",
      color: "#059669",
      values: records.filter((r) => r.p_a !== null).map((r) => ({ x: r.iter, y: r.p_a as number })),
    });
  }
  return chartSvg(series);
}

export function lossSparkline(records: TrajectoryRecord[]): string {
  return chartSvg([
    {
      label: "loss",
      color: "#7c3aed",
      values: records.map((r) => ({ x: r.iter, y: r.loss })),
    },
  ]);
}
