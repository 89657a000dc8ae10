// Typed client for the job service. Every pixel shown in the UI comes
// through these endpoints; nothing is computed locally.

import type {
  BackendEntry,
  JobView,
  MatrixDoc,
  SnapshotDoc,
  TrajectoryRecord,
  TuneConfigDoc,
} from "./types";

// Settable at build time (esbuild --define) or runtime before boot.
declare const __API_BASE__: string | undefined;
export const API_BASE =
  typeof __API_BASE__ !== "undefined" && __API_BASE__ ? __API_BASE__ : "";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public field?: string,
  ) {
    super(message);
  }
}

async function throwFrom(resp: Response): Promise<never> {
  let message = `HTTP ${resp.status}`;
  let field: string | undefined;
  try {
    const doc = await resp.json();
    const detail = doc?.detail ?? doc;
    if (typeof detail === "string") message = detail;
    else if (detail && typeof detail.message === "string") {
      message = detail.message;
      field = detail.field;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, message, field);
}

async function getJson<T>(path: string, signal?: AbortSignal): Promise<T> {
  const resp = await fetch(`${API_BASE}${path}`, { signal });
  if (!resp.ok) await throwFrom(resp);
  return (await resp.json()) as T;
}

export const api = {
  health(signal?: AbortSignal): Promise<{ status: string }> {
    return getJson("/v1/healthz", signal);
  },

  backends(signal?: AbortSignal): Promise<BackendEntry[]> {
    return getJson("/v1/backends", signal);
  },

  async submitJob(image: Blob, config: TuneConfigDoc, signal?: AbortSignal): Promise<string> {
    const form = new FormData();
    form.append("image", image, "input.png");
    form.append("config", JSON.stringify(config));
    const resp = await fetch(`${API_BASE}/v1/jobs`, { method: "POST", body: form, signal });
    if (!resp.ok) await throwFrom(resp);
    const doc = (await resp.json()) as { id: string };
    return doc.id;
  },

  getJob(id: string, signal?: AbortSignal): Promise<JobView> {
    return getJson(`/v1/jobs/${id}`, signal);
  },

  listJobs(limit = 50, offset = 0, signal?: AbortSignal): Promise<JobView[]> {
    return getJson(`/v1/jobs?limit=${limit}&offset=${offset}`, signal);
  },

  async trajectory(id: string, signal?: AbortSignal): Promise<TrajectoryRecord[]> {
    const resp = await fetch(`${API_BASE}/v1/jobs/${id}/trajectory`, { signal });
    if (!resp.ok) await throwFrom(resp);
    const text = await resp.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as TrajectoryRecord);
  },

  matrix(id: string, signal?: AbortSignal): Promise<MatrixDoc> {
    return getJson(`/v1/jobs/${id}/matrix`, signal);
  },

  snapshots(id: string, signal?: AbortSignal): Promise<SnapshotDoc[]> {
    return getJson(`/v1/jobs/${id}/snapshots`, signal);
  },

  previewUrl(id: string, iter?: number): string {
    const suffix = iter === undefined ? "" : `?iter=${iter}`;
    return `${API_BASE}/v1/jobs/${id}/preview${suffix}`;
  },

  matrixUrl(id: string): string {
    return `${API_BASE}/v1/jobs/${id}/matrix`;
  },

  eventsUrl(id: string): string {
    return `${API_BASE}/v1/jobs/${id}/events`;
  },
};

export type PollHandle = { stop(): void; done: Promise<JobView> };

// Poll a job to a terminal state, reporting progress along the way.
// The UI works with polling alone; the SSE stream is layered on top
// elsewhere and silently abandoned if it drops.
export function pollJob(
  id: string,
  onUpdate: (job: JobView) => void,
  intervalMs = 1000,
): PollHandle {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | undefined;

  const done = new Promise<JobView>((resolve, reject) => {
    const tick = async () => {
      if (stopped) return;
      try {
        const job = await api.getJob(id);
        if (stopped) return;
        onUpdate(job);
        if (job.status === "done" || job.status === "failed") {
          resolve(job);
          return;
        }
      } catch (err) {
        if (!stopped) {
          reject(err);
          return;
        }
      }
      timer = setTimeout(tick, intervalMs);
    };
    void tick();
  });

  return {
    stop() {
      stopped = true;
      if (timer !== undefined) clearTimeout(timer);
    },
    done,
  };
}
