import { describe, expect, it } from "vitest";

import { chartSvg, polyline, similarityChart } from "../src/charts";
import type { TrajectoryRecord } from "../src/types";

const records: TrajectoryRecord[] = [
  { iter: 0, loss: -0.1, sim_a: 0.1, sim_b: null, p_a: null },
  { iter: 1, loss: -0.15, sim_a: 0.15, sim_b: null, p_a: null },
  { iter: 2, loss: -0.2, sim_a: 0.2, sim_b: null, p_a: null },
];

describe("polyline", () => {
  it("emits one point per value", () => {
    const svg = polyline({ label: "x", color: "#000", values: records.map((r) => ({ x: r.iter, y: r.sim_a })) });
    const points = svg.match(/points="([^"]+)"/)![1].trim().split(" ");
    expect(points).toHaveLength(3);
  });

  it("is empty for an empty series", () => {
    expect(polyline({ label: "x", color: "#000", values: [] })).toBe("");
  });
});

describe("similarityChart", () => {
  it("renders a non-empty svg for single-prompt records", () => {
    const svg = similarityChart(records);
    expect(svg).toContain("<svg");
    expect(svg).toContain("polyline");
    expect(svg).toContain("similarity A");
    expect(svg).not.toContain("p_A");
  });

  it("adds series for two-prompt records", () => {
    const two = records.map((r) => ({ ...r, sim_b: 0.05, p_a: 0.6 }));
    const svg = similarityChart(two);
    expect(svg).toContain("similarity B");
    expect(svg).toContain("p_A");
  });

  it("survives constant series (degenerate scale)", () => {
    const flat = records.map((r) => ({ ...r, sim_a: 0.5 }));
    expect(similarityChart(flat)).toContain("polyline");
  });
});

describe("chartSvg", () => {
  it("drops empty series but keeps the frame", () => {
    const svg = chartSvg([{ label: "none", color: "#123", values: [] }]);
    expect(svg).toContain("<svg");
    expect(svg).not.toContain("polyline");
  });
});
