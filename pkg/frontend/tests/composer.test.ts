// UI smoke, part 1: the composer builds a valid config and submits a job
// against the (faked) synthetic backend.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { buildConfig, mountComposer } from "../src/composer";
import { FakeService } from "./fakeService";

let root: HTMLElement;

beforeEach(() => {
  root = document.createElement("main");
  document.body.append(root);
  sessionStorage.clear();
});

afterEach(() => {
  root.remove();
  vi.unstubAllGlobals();
});

function setImage(name = "photo.png"): void {
  const input = root.querySelector<HTMLInputElement>("input[type=file]")!;
  const file = new File([new Uint8Array([1, 2, 3])], name, { type: "image/png" });
  Object.defineProperty(input, "files", { value: [file], configurable: true });
  input.dispatchEvent(new Event("change"));
}

function type(id: string, value: string): void {
  const input = root.querySelector<HTMLInputElement | HTMLSelectElement>(`#${id}`)!;
  input.value = value;
  input.dispatchEvent(new Event("input"));
  input.dispatchEvent(new Event("change"));
}

describe("buildConfig", () => {
  it("renders template B requests like the service expects", () => {
    const config = buildConfig({
      keyword: "vibrant", template: "B", content: "", keywordB: "",
      alpha: 0.5, tau: 0.25, iterations: 1000, seed: 0,
      optimizer: "adam", backend: "synthetic",
    });
    expect(config.prompt).toEqual({ template: "B", keyword: "vibrant", content: null });
    expect(config.prompt_b).toBeNull();
  });

  it("fills the two-prompt objective when a second keyword is set", () => {
    const config = buildConfig({
      keyword: "happy", template: "B", content: "", keywordB: "sad",
      alpha: 0.99, tau: 0.25, iterations: 500, seed: 1,
      optimizer: "sgd", backend: "synthetic",
    });
    expect(config.prompt_b?.keyword).toBe("sad");
    expect(config.alpha).toBe(0.99);
  });
});

describe("composer screen", () => {
  it("disables submit until an image and keyword are present", async () => {
    const service = new FakeService();
    service.install();
    mountComposer(root, () => undefined);
    const submit = root.querySelector<HTMLButtonElement>("#submit")!;
    expect(submit.hasAttribute("disabled")).toBe(true);
    type("keyword", "vibrant");
    expect(submit.hasAttribute("disabled")).toBe(true);
    setImage();
    expect(submit.hasAttribute("disabled")).toBe(false);
  });

  it("previews the rendered prompt for template B", () => {
    const service = new FakeService();
    service.install();
    mountComposer(root, () => undefined);
    type("keyword", "vibrant");
    expect(root.querySelector("#prompt-preview")!.textContent)
      .toContain("A vibrant photo");
  });

  it("submits a job and navigates to the job view", async () => {
    const service = new FakeService();
    service.install();
    const visited: string[] = [];
    mountComposer(root, (hash) => visited.push(hash));
    type("keyword", "vibrant");
    setImage();
    root.querySelector<HTMLButtonElement>("#submit")!.click();
    await vi.waitFor(() => expect(visited).toHaveLength(1));
    expect(visited[0]).toMatch(/^#\/jobs\/f\d+/);
    expect(service.submissions[0].prompt.keyword).toBe("vibrant");
    expect(service.submissions[0].backend).toBe("synthetic");
  });

  it("surfaces field-level validation errors inline", async () => {
    vi.stubGlobal("fetch", vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
      if (init?.method === "POST") {
        return new Response(JSON.stringify({ detail: { field: "tau", message: "must be > 0" } }),
          { status: 400 });
      }
      return new Response(JSON.stringify([]), { status: 200 });
    }));
    mountComposer(root, () => undefined);
    type("keyword", "vibrant");
    setImage();
    root.querySelector<HTMLButtonElement>("#submit")!.click();
    await vi.waitFor(() =>
      expect(root.querySelector("#composer-error")!.textContent).toContain("tau"));
  });

  it("keeps submit disabled for template D without content", () => {
    const service = new FakeService();
    service.install();
    mountComposer(root, () => undefined);
    type("keyword", "warm");
    setImage();
    type("template", "D");
    const submit = root.querySelector<HTMLButtonElement>("#submit")!;
    expect(submit.hasAttribute("disabled")).toBe(true);
    type("content", "a lighthouse");
    expect(submit.hasAttribute("disabled")).toBe(false);
  });
});
