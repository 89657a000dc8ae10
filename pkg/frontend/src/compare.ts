// Compare screen: side-by-side input/output with a draggable split, an
// alpha-sweep gallery that fans out one job per grid point (bounded
// concurrency, cancelled on navigation), and config cloning.

import { api, pollJob, type PollHandle } from "./api";
import { clear, el, RequestGate, statusBadge } from "./dom";
import { stashClone } from "./composer";
import type { JobView, TuneConfigDoc } from "./types";

export const DEFAULT_ALPHA_GRID = [0.01, 0.25, 0.5, 0.75, 0.99];

export function sweepConfigs(base: TuneConfigDoc, keywordA: string, keywordB: string,
                             grid: number[] = DEFAULT_ALPHA_GRID): TuneConfigDoc[] {
  return grid.map((alpha) => ({
    ...base,
    prompt: { ...base.prompt, keyword: keywordA },
    prompt_b: { ...base.prompt, keyword: keywordB },
    alpha,
  }));
}

function splitView(jobId: string): HTMLElement {
  const box = el("div", { class: "split-view", id: "split-view" });
  const before = el("img", { src: api.previewUrl(jobId, 0), alt: "input", class: "split-under" });
  const after = el("img", { src: api.previewUrl(jobId), alt: "output", class: "split-over" });
  const handle = el("input", {
    type: "range", min: "0", max: "100", value: "50", class: "split-handle", id: "split-handle",
  });
  const update = () => {
    after.style.clipPath = `inset(0 ${100 - Number(handle.value)}% 0 0)`;
  };
  handle.addEventListener("input", update);
  update();
  box.append(before, after, handle);
  return box;
}

export function mountCompare(
  root: HTMLElement,
  baseJobId: string | null,
  navigate: (hash: string) => void,
): () => void {
  clear(root);
  const gate = new RequestGate(4);
  const handles: PollHandle[] = [];

  const title = el("h2", { text: "Compare" });
  const picker = el("select", { id: "job-picker" });
  const splitBox = el("div", { id: "split-box" });
  const error = el("div", { class: "error", id: "compare-error" });
  root.append(title, el("div", { class: "row" }, [el("label", { text: "job" }), picker]), splitBox, error);

  const showJob = (job: JobView) => {
    clear(splitBox);
    splitBox.append(splitView(job.id));
    const rerun = el("button", { text: "clone into composer", class: "button", id: "clone-button" });
    rerun.addEventListener("click", () => {
      stashClone(job.config);
      navigate("#/compose");
    });
    splitBox.append(rerun);
    mountSweep(job);
  };

  const strip = el("div", { class: "sweep-strip", id: "sweep-strip" });
  const sweepControls = el("div", { id: "sweep-controls" });
  root.append(el("h3", { text: "Alpha sweep" }), sweepControls, strip);

  const mountSweep = (job: JobView) => {
    clear(sweepControls);
    const keywordA = el("input", { id: "sweep-a", value: job.config.prompt.keyword || "happy" });
    const keywordB = el("input", { id: "sweep-b", value: job.config.prompt_b?.keyword ?? "sad" });
    const run = el("button", { text: "run 5-point sweep", id: "run-sweep", class: "button" });
    sweepControls.append(
      el("div", { class: "row" }, [el("label", { text: "prompt A" }), keywordA]),
      el("div", { class: "row" }, [el("label", { text: "prompt B" }), keywordB]),
      run,
    );
    run.addEventListener("click", async () => {
      run.setAttribute("disabled", "");
      clear(strip);
      error.textContent = "";
      try {
        const input = await fetch(api.previewUrl(job.id, 0), { signal: gate.signal });
        const blob = new Blob([await input.arrayBuffer()], { type: "image/png" });
        const configs = sweepConfigs(job.config, keywordA.value, keywordB.value);
        const panels = configs.map((config) => {
          const panel = el("figure", { class: "sweep-panel" });
          panel.append(
            el("figcaption", { text: `α = ${config.alpha.toFixed(2)}` }),
            el("div", { class: "pending", text: "queued…" }),
          );
          strip.append(panel);
          return panel;
        });
        await Promise.all(configs.map((config, i) =>
          gate.run(async (signal) => {
            const id = await api.submitJob(blob, config, signal);
            const handle = pollJob(id, () => undefined);
            handles.push(handle);
            const finished = await handle.done;
            const panel = panels[i];
            clear(panel);
            panel.append(el("figcaption", { text: `α = ${config.alpha.toFixed(2)}` }));
            if (finished.status === "done") {
              panel.append(el("img", { src: api.previewUrl(id), alt: `alpha ${config.alpha}` }));
            } else {
              panel.append(statusBadge(finished.status));
            }
          }),
        ));
      } catch (err) {
        if (!gate.signal.aborted) error.textContent = String(err);
      } finally {
        run.removeAttribute("disabled");
      }
    });
  };

  void api
    .listJobs(100)
    .then((jobs) => {
      const completed = jobs.filter((j) => j.status === "done");
      if (completed.length === 0) {
        error.textContent = "no completed jobs yet — tune something first";
        return;
      }
      for (const job of completed) {
        picker.append(el("option", { value: job.id, text: `${job.id} (${job.config.prompt.keyword})` }));
      }
      const initial = baseJobId && completed.some((j) => j.id === baseJobId)
        ? baseJobId
        : completed[0].id;
      picker.value = initial;
      const chosen = completed.find((j) => j.id === initial);
      if (chosen) showJob(chosen);
      picker.addEventListener("change", () => {
        const next = completed.find((j) => j.id === picker.value);
        if (next) showJob(next);
      });
    })
    .catch((err) => {
      error.textContent = String(err);
    });

  return () => {
    gate.cancel();
    handles.forEach((h) => h.stop());
    clear(root);
  };
}
