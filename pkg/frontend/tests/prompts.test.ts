import { describe, expect, it } from "vitest";

import { renderPrompt, validatePrompt } from "../src/prompts";

describe("renderPrompt", () => {
  it("renders the four templates", () => {
    expect(renderPrompt({ template: "A", keyword: "warm", content: null })).toBe("warm");
    expect(renderPrompt({ template: "B", keyword: "vibrant", content: null }))
      .toBe("A vibrant photo");
    expect(renderPrompt({ template: "C", keyword: "dreamy", content: null }))
      .toBe("A photo that appears dreamy");
    expect(renderPrompt({ template: "D", keyword: "warm", content: "a lighthouse" }))
      .toBe("A warm photo of a lighthouse");
  });
});

describe("validatePrompt", () => {
  it("requires a keyword", () => {
    expect(validatePrompt({ template: "B", keyword: "  ", content: null })).toMatch(/keyword/);
  });

  it("requires content exactly for template D", () => {
    expect(validatePrompt({ template: "D", keyword: "warm", content: "" })).toMatch(/content/);
    expect(validatePrompt({ template: "D", keyword: "warm", content: "a dog" })).toBeNull();
    expect(validatePrompt({ template: "B", keyword: "warm", content: "spill" })).toMatch(/content/);
  });
});
