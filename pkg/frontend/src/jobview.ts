// Job view: live similarity chart, parameter sparkline, snapshot-driven
// preview refresh, and the final matrix with download links. Polling every
// second is the source of truth; the SSE stream only triggers earlier
// refreshes and is dropped silently if it fails.

import { api, ApiError, pollJob } from "./api";
import { chartSvg, lossSparkline, similarityChart, type Series } from "./charts";
import { clear, el, statusBadge } from "./dom";
import { stashClone } from "./composer";
import type { JobView, MatrixDoc } from "./types";

const PHI_COLORS: Record<string, string> = {
  "12": "#2563eb", "13": "#db2777", "21": "#059669",
  "23": "#d97706", "31": "#7c3aed", "32": "#0891b2",
};

export function matrixGrid(doc: MatrixDoc): HTMLElement {
  const grid = el("div", { class: "matrix-grid", id: "matrix-grid" });
  doc.matrix.forEach((row, i) => {
    row.forEach((value, j) => {
      const deviation = i === j ? value - 1 : value;
      const magnitude = Math.min(Math.abs(deviation) / (doc.tau || 1), 1);
      const hue = deviation >= 0 ? 14 : 215;
      const cell = el("div", {
        class: "matrix-cell",
        text: value.toFixed(4),
        title: `row ${i + 1}, col ${j + 1}`,
      });
      cell.style.background = `hsla(${hue}, 85%, 55%, ${(magnitude * 0.85).toFixed(3)})`;
      grid.append(cell);
    });
  });
  return grid;
}

export function snapshotSparkline(
  snapshots: { iter: number; phi: Record<string, number> }[],
): string {
  const keys = Object.keys(PHI_COLORS);
  const series: Series[] = keys.map((key) => ({
    label: `φ${key}`,
    color: PHI_COLORS[key],
    values: snapshots.map((s) => ({ x: s.iter, y: s.phi[key] ?? 0 })),
  }));
  return chartSvg(series);
}

export function mountJobView(
  root: HTMLElement,
  jobId: string,
  navigate: (hash: string) => void,
): () => void {
  clear(root);
  const title = el("h2", { text: `Job ${jobId}` });
  const status = el("div", { class: "status-line", id: "status-line" });
  const errorBanner = el("div", { class: "error banner", id: "error-banner" });
  const chart = el("div", { class: "chart-box", id: "similarity-chart" });
  const sparkline = el("div", { class: "chart-box", id: "param-sparkline" });
  const previewImg = el("img", { class: "preview", id: "preview", alt: "preview" });
  const matrixBox = el("div", { id: "matrix-box" });
  const configBox = el("pre", { class: "config-echo", id: "config-echo" });
  const actions = el("div", { class: "actions" });

  root.append(title, status, errorBanner,
    el("h3", { text: "Similarity" }), chart,
    el("h3", { text: "Parameters" }), sparkline,
    el("h3", { text: "Preview" }), previewImg,
    matrixBox, actions,
    el("h3", { text: "Config" }), configBox);

  let lastSnapshotIter = -1;
  let stopped = false;
  let eventSource: EventSource | null = null;

  const refreshTrajectory = async () => {
    try {
      const records = await api.trajectory(jobId);
      if (records.length > 0) chart.innerHTML = similarityChart(records) + lossSparkline(records);
    } catch {
      // transient; the next poll retries
    }
    try {
      const snapshots = await api.snapshots(jobId);
      if (snapshots.length > 0) {
        sparkline.innerHTML = snapshotSparkline(snapshots);
        const newest = snapshots[snapshots.length - 1].iter;
        if (newest !== lastSnapshotIter) {
          lastSnapshotIter = newest;
          previewImg.src = `${api.previewUrl(jobId, newest)}&_=${Date.now()}`;
        }
      }
    } catch {
      // snapshots may not exist yet
    }
  };

  const onUpdate = (job: JobView) => {
    clear(status);
    status.append(
      statusBadge(job.status),
      el("span", {
        text: ` iteration ${job.progress.iteration} / ${job.progress.total}`,
      }),
    );
    configBox.textContent = JSON.stringify(job.config, null, 2);
    if (job.status === "failed" && job.error) {
      errorBanner.textContent = `job failed: ${job.error}`;
    }
    void refreshTrajectory();
  };

  const finish = async (job: JobView) => {
    if (job.status !== "done") return;
    try {
      const doc = await api.matrix(jobId);
      clear(matrixBox);
      matrixBox.append(el("h3", { text: "Final matrix" }), matrixGrid(doc));
      const download = el("a", {
        href: api.matrixUrl(jobId),
        download: `matrix-${jobId}.json`,
        text: "download matrix.json",
        class: "button",
      });
      const png = el("a", {
        href: api.previewUrl(jobId),
        download: `output-${jobId}.png`,
        text: "download output.png",
        class: "button",
      });
      const rerun = el("button", { text: "clone into composer", class: "button" });
      rerun.addEventListener("click", () => {
        stashClone(job.config);
        navigate("#/compose");
      });
      const compare = el("button", { text: "compare", class: "button" });
      compare.addEventListener("click", () => navigate(`#/compare/${jobId}`));
      actions.append(download, png, rerun, compare);
    } catch {
      // matrix may 409 if the job failed between polls
    }
  };

  const handle = pollJob(jobId, onUpdate);
  handle.done
    .then(async (job) => {
      await refreshTrajectory();
      await finish(job);
    })
    .catch((err) => {
      if (stopped) return;
      errorBanner.textContent =
        err instanceof ApiError && err.status === 404
          ? `No job ${jobId} here. It may have been purged.`
          : String(err);
    });

  // SSE is an accelerator only; any failure falls back to the poll loop.
  if (typeof EventSource !== "undefined") {
    try {
      eventSource = new EventSource(api.eventsUrl(jobId));
      eventSource.addEventListener("record", () => void refreshTrajectory());
      eventSource.addEventListener("status", () => eventSource?.close());
      eventSource.onerror = () => {
        eventSource?.close();
        eventSource = null;
      };
    } catch {
      eventSource = null;
    }
  }

  return () => {
    stopped = true;
    handle.stop();
    eventSource?.close();
    clear(root);
  };
}
