// Composer screen: pick an image, describe the look, dial alpha and tau,
// choose a backend, submit. Validation mirrors the service's 400 responses
// inline; submit stays disabled until an image is present.

import { api, ApiError } from "./api";
import { clear, el } from "./dom";
import { renderPrompt, TEMPLATES, validatePrompt } from "./prompts";
import type { PromptDoc, TemplateId, TuneConfigDoc } from "./types";

const CLONE_KEY = "ccmtune.clone";

export function defaultConfig(): TuneConfigDoc {
  return {
    prompt: { template: "B", keyword: "", content: null },
    prompt_b: null,
    alpha: 0.5,
    temperature: 1.0,
    tau: 0.25,
    iterations: 1000,
    learning_rate: 0.002,
    optimizer: "adam",
    gradient: "auto",
    seed: 0,
    snapshot_every: 50,
    backend: "synthetic",
    early_stop: false,
  };
}

export function stashClone(config: TuneConfigDoc): void {
  sessionStorage.setItem(CLONE_KEY, JSON.stringify(config));
}

function takeClone(): TuneConfigDoc | null {
  const raw = sessionStorage.getItem(CLONE_KEY);
  if (!raw) return null;
  sessionStorage.removeItem(CLONE_KEY);
  try {
    return { ...defaultConfig(), ...(JSON.parse(raw) as Partial<TuneConfigDoc>) };
  } catch {
    return null;
  }
}

export function buildConfig(form: {
  keyword: string;
  template: TemplateId;
  content: string;
  keywordB: string;
  alpha: number;
  tau: number;
  iterations: number;
  seed: number;
  optimizer: string;
  backend: string;
}): TuneConfigDoc {
  const prompt: PromptDoc = {
    template: form.template,
    keyword: form.keyword.trim(),
    content: form.template === "D" ? form.content.trim() : null,
  };
  const config = defaultConfig();
  config.prompt = prompt;
  config.tau = form.tau;
  config.iterations = form.iterations;
  config.seed = form.seed;
  config.optimizer = form.optimizer as TuneConfigDoc["optimizer"];
  config.backend = form.backend;
  if (form.keywordB.trim()) {
    config.prompt_b = {
      template: form.template,
      keyword: form.keywordB.trim(),
      content: form.template === "D" ? form.content.trim() : null,
    };
    config.alpha = form.alpha;
  }
  return config;
}

export function mountComposer(root: HTMLElement, navigate: (hash: string) => void): () => void {
  clear(root);
  let image: File | null = null;
  const cloned = takeClone();

  const drop = el("div", { class: "dropzone", text: "Drop an image here or " });
  const fileInput = el("input", { type: "file", accept: "image/png,image/jpeg" });
  drop.append(fileInput);
  const imageNote = el("div", { class: "note", id: "image-note", text: "no image selected" });

  const keyword = el("input", { id: "keyword", placeholder: "vibrant, warm, dreamy…" });
  const template = el("select", { id: "template" });
  for (const t of TEMPLATES) {
    template.append(el("option", { value: t.id, text: `${t.id}  ${t.label}` }));
  }
  template.value = "B";
  const content = el("input", { id: "content", placeholder: "content description (template D)" });
  const preview = el("div", { class: "prompt-preview", id: "prompt-preview" });

  const keywordB = el("input", { id: "keyword-b", placeholder: "optional second keyword (e.g. dull)" });
  const alpha = el("input", { id: "alpha", type: "range", min: "0.01", max: "0.99", step: "0.01", value: "0.5" });
  const alphaOut = el("span", { id: "alpha-value", text: "0.50" });

  const tau = el("input", { id: "tau", type: "range", min: "0.05", max: "1.0", step: "0.05", value: "0.25" });
  const tauOut = el("span", { id: "tau-value", text: "0.25" });

  const iterations = el("input", { id: "iterations", type: "number", value: "1000", min: "1" });
  const seed = el("input", { id: "seed", type: "number", value: "0" });
  const optimizer = el("select", { id: "optimizer" });
  for (const kind of ["adam", "adamw", "sgd"]) {
    optimizer.append(el("option", { value: kind, text: kind }));
  }
  const backend = el("select", { id: "backend" });
  backend.append(el("option", { value: "synthetic", text: "synthetic" }));

  const submit = el("button", { id: "submit", text: "Tune", disabled: "" });
  const error = el("div", { class: "error", id: "composer-error" });

  const refresh = () => {
    const doc: PromptDoc = {
      template: template.value as TemplateId,
      keyword: keyword.value,
      content: template.value === "D" ? content.value : null,
    };
    content.style.display = template.value === "D" ? "" : "none";
    const problem = validatePrompt(doc);
    preview.textContent = problem ? "" : `→ "${renderPrompt(doc)}"`;
    alphaOut.textContent = Number(alpha.value).toFixed(2);
    tauOut.textContent = Number(tau.value).toFixed(2);
    const ready = image !== null && problem === null;
    if (ready) submit.removeAttribute("disabled");
    else submit.setAttribute("disabled", "");
  };

  fileInput.addEventListener("change", () => {
    image = fileInput.files?.[0] ?? null;
    imageNote.textContent = image ? image.name : "no image selected";
    refresh();
  });
  drop.addEventListener("dragover", (e) => e.preventDefault());
  drop.addEventListener("drop", (e) => {
    e.preventDefault();
    const dropped = e.dataTransfer?.files?.[0];
    if (dropped) {
      image = dropped;
      imageNote.textContent = dropped.name;
      refresh();
    }
  });
  for (const input of [keyword, content, keywordB]) {
    input.addEventListener("input", refresh);
  }
  for (const input of [template, alpha, tau]) {
    input.addEventListener("change", refresh);
    input.addEventListener("input", refresh);
  }

  submit.addEventListener("click", async () => {
    if (!image) return;
    error.textContent = "";
    const config = buildConfig({
      keyword: keyword.value,
      template: template.value as TemplateId,
      content: content.value,
      keywordB: keywordB.value,
      alpha: Number(alpha.value),
      tau: Number(tau.value),
      iterations: Number(iterations.value),
      seed: Number(seed.value),
      optimizer: optimizer.value,
      backend: backend.value,
    });
    submit.setAttribute("disabled", "");
    try {
      const id = await api.submitJob(image, config);
      navigate(`#/jobs/${id}`);
    } catch (err) {
      if (err instanceof ApiError) {
        error.textContent = err.field ? `${err.field}: ${err.message}` : err.message;
      } else {
        error.textContent = String(err);
      }
      submit.removeAttribute("disabled");
    }
  });

  root.append(
    el("h2", { text: "Compose" }),
    drop,
    imageNote,
    el("div", { class: "row" }, [el("label", { text: "keyword" }), keyword]),
    el("div", { class: "row" }, [el("label", { text: "template" }), template]),
    el("div", { class: "row" }, [el("label", { text: "content" }), content]),
    preview,
    el("h3", { text: "Two-prompt interpolation" }),
    el("div", { class: "row" }, [el("label", { text: "keyword B" }), keywordB]),
    el("div", { class: "row" }, [el("label", { text: "alpha" }), alpha, alphaOut]),
    el("h3", { text: "Optimization" }),
    el("div", { class: "row" }, [el("label", { text: "tau" }), tau, tauOut]),
    el("div", { class: "row" }, [el("label", { text: "iterations" }), iterations]),
    el("div", { class: "row" }, [el("label", { text: "seed" }), seed]),
    el("div", { class: "row" }, [el("label", { text: "optimizer" }), optimizer]),
    el("div", { class: "row" }, [el("label", { text: "backend" }), backend]),
    submit,
    error,
  );

  // Populate the backend list; keep the synthetic default on failure.
  void api
    .backends()
    .then((entries) => {
      clear(backend);
      for (const entry of entries) {
        const opt = el("option", { value: entry.name, text: `${entry.name} (${entry.kind})` });
        if (!entry.available) opt.setAttribute("disabled", "");
        backend.append(opt);
      }
    })
    .catch(() => undefined);

  if (cloned) {
    keyword.value = cloned.prompt.keyword;
    template.value = cloned.prompt.template;
    content.value = cloned.prompt.content ?? "";
    keywordB.value = cloned.prompt_b?.keyword ?? "";
    alpha.value = String(cloned.alpha);
    tau.value = String(cloned.tau);
    iterations.value = String(cloned.iterations);
    seed.value = String(cloned.seed);
    optimizer.value = cloned.optimizer;
  }
  refresh();
  return () => clear(root);
}
