// Hash router and boot. Screens mount into #screen and return a cleanup
// that cancels their in-flight requests when the route changes.

import { mountCompare } from "./compare";
import { mountComposer } from "./composer";
import { mountJobView } from "./jobview";
import { api } from "./api";
import { clear, el, statusBadge } from "./dom";

type Cleanup = () => void;

function mountJobList(root: HTMLElement, navigate: (hash: string) => void): Cleanup {
  clear(root);
  root.append(el("h2", { text: "Jobs" }));
  const list = el("div", { class: "job-list", id: "job-list" });
  root.append(list);
  void api
    .listJobs(100)
    .then((jobs) => {
      if (jobs.length === 0) {
        list.append(el("div", { class: "note", text: "nothing yet — compose a job" }));
        return;
      }
      for (const job of jobs) {
        const row = el("div", { class: "job-row" });
        const link = el("a", { href: `#/jobs/${job.id}`, text: job.id });
        link.addEventListener("click", (e) => {
          e.preventDefault();
          navigate(`#/jobs/${job.id}`);
        });
        row.append(
          link,
          statusBadge(job.status),
          el("span", { class: "note", text: `"${job.config.prompt.keyword}" · ${job.submitted_at}` }),
        );
        list.append(row);
      }
    })
    .catch((err) => list.append(el("div", { class: "error", text: String(err) })));
  return () => clear(root);
}

export function route(hash: string, root: HTMLElement, navigate: (hash: string) => void): Cleanup {
  const jobMatch = /^#\/jobs\/([0-9a-f]+)$/.exec(hash);
  if (jobMatch) return mountJobView(root, jobMatch[1], navigate);
  const compareMatch = /^#\/compare(?:\/([0-9a-f]+))?$/.exec(hash);
  if (compareMatch) return mountCompare(root, compareMatch[1] ?? null, navigate);
  if (hash === "#/list") return mountJobList(root, navigate);
  return mountComposer(root, navigate);
}

export function boot(win: Window = window): void {
  const doc = win.document;
  const root = doc.getElementById("screen");
  if (!root) return;

  let cleanup: Cleanup | null = null;
  const navigate = (hash: string) => {
    if (win.location.hash !== hash) {
      win.location.hash = hash; // hashchange re-routes
      return;
    }
    render();
  };
  const render = () => {
    cleanup?.();
    cleanup = route(win.location.hash, root as HTMLElement, navigate);
  };
  win.addEventListener("hashchange", render);
  render();
}

if (typeof window !== "undefined" && !("__CCMTUNE_TEST__" in globalThis)) {
  boot();
}
