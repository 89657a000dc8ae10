// Prompt construction preview, mirroring the service's template table.

import type { PromptDoc, TemplateId } from "./types";

export const TEMPLATES: { id: TemplateId; label: string }[] = [
  { id: "A", label: '"{keyword}"' },
  { id: "B", label: '"A {keyword} photo"' },
  { id: "C", label: '"A photo that appears {keyword}"' },
  { id: "D", label: '"A {keyword} photo of {content}"' },
];

export function renderPrompt(doc: PromptDoc): string {
  switch (doc.template) {
    case "A":
      return doc.keyword;
    case "B":
      return `A ${doc.keyword} photo`;
    case "C":
      return `A photo that appears ${doc.keyword}`;
    case "D":
      return `A ${doc.keyword} photo of ${doc.content ?? ""}`;
  }
}

export function validatePrompt(doc: PromptDoc): string | null {
  if (!doc.keyword.trim()) return "keyword is required";
  if (doc.template === "D" && !(doc.content ?? "").trim()) {
    return "template D needs a content description";
  }
  if (doc.template !== "D" && doc.content) {
    return "content description only applies to template D";
  }
  return null;
}
