// UI smoke, part 3: the compare screen lays out a 5-point alpha sweep in
// alpha order, driven entirely through service endpoints.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { DEFAULT_ALPHA_GRID, mountCompare, sweepConfigs } from "../src/compare";
import { defaultConfig } from "../src/composer";
import { FakeService } from "./fakeService";

let root: HTMLElement;
let cleanup: (() => void) | null = null;

beforeEach(() => {
  root = document.createElement("main");
  document.body.append(root);
  sessionStorage.clear();
});

afterEach(() => {
  cleanup?.();
  cleanup = null;
  root.remove();
  vi.unstubAllGlobals();
});

describe("sweepConfigs", () => {
  it("produces five configs ordered by alpha with the prompt pair", () => {
    const base = defaultConfig();
    base.prompt.keyword = "warm";
    const configs = sweepConfigs(base, "happy", "sad");
    expect(configs.map((c) => c.alpha)).toEqual(DEFAULT_ALPHA_GRID);
    for (const config of configs) {
      expect(config.prompt.keyword).toBe("happy");
      expect(config.prompt_b?.keyword).toBe("sad");
    }
  });

  it("identical prompts still yield five submissions (service dedupes nothing)", () => {
    const configs = sweepConfigs(defaultConfig(), "same", "same");
    expect(configs).toHaveLength(5);
    expect(new Set(configs.map((c) => c.alpha)).size).toBe(5);
  });
});

describe("compare screen", () => {
  it("renders the split view for a completed job", async () => {
    const service = new FakeService();
    service.install();
    const config = defaultConfig();
    config.prompt.keyword = "warm";
    service.seedJob(config, "done");

    cleanup = mountCompare(root, null, () => undefined);
    await vi.waitFor(() => expect(root.querySelector("#split-view")).toBeTruthy());
    expect(root.querySelectorAll("#split-view img")).toHaveLength(2);
  });

  it("runs a 5-point alpha sweep laid out in alpha order", async () => {
    const service = new FakeService();
    service.install();
    const config = defaultConfig();
    config.prompt.keyword = "happy";
    config.prompt_b = { template: "B", keyword: "sad", content: null };
    service.seedJob(config, "done");

    cleanup = mountCompare(root, null, () => undefined);
    await vi.waitFor(() => expect(root.querySelector("#run-sweep")).toBeTruthy());
    root.querySelector<HTMLButtonElement>("#run-sweep")!.click();

    await vi.waitFor(() => {
      expect(root.querySelectorAll("#sweep-strip .sweep-panel img")).toHaveLength(5);
    });
    const captions = [...root.querySelectorAll("#sweep-strip figcaption")]
      .map((c) => c.textContent);
    expect(captions).toEqual([
      "α = 0.01", "α = 0.25", "α = 0.50", "α = 0.75", "α = 0.99",
    ]);
    // one submission per grid point, alphas ascending
    expect(service.submissions.map((c) => c.alpha)).toEqual(DEFAULT_ALPHA_GRID);
  });

  it("clone button stashes the config for the composer", async () => {
    const service = new FakeService();
    service.install();
    const config = defaultConfig();
    config.prompt.keyword = "warm";
    config.tau = 0.5;
    service.seedJob(config, "done");

    const visited: string[] = [];
    cleanup = mountCompare(root, null, (hash) => visited.push(hash));
    await vi.waitFor(() => expect(root.querySelector("#clone-button")).toBeTruthy());
    root.querySelector<HTMLButtonElement>("#clone-button")!.click();
    expect(visited).toEqual(["#/compose"]);
    const stashed = JSON.parse(sessionStorage.getItem("ccmtune.clone")!);
    expect(stashed.tau).toBe(0.5);
  });

  it("explains when no completed jobs exist", async () => {
    const service = new FakeService();
    service.install();
    cleanup = mountCompare(root, null, () => undefined);
    await vi.waitFor(() =>
      expect(root.querySelector("#compare-error")!.textContent).toMatch(/no completed jobs/));
  });
});
