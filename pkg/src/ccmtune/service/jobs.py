"""Job records, on-disk layout, and the bounded worker pool.

Each job owns one directory under the data root:

    <data_dir>/<job_id>/
        meta.json          status, timestamps, error, progress
        config.json        fully resolved tuning config (wire format)
        input.png          canonical re-encoding of the submitted image
        trajectory.jsonl   one record per iteration, appended live
        snapshots.json     parameter snapshots, rewritten as they land
        matrix.json        final matrix (on success)
        preview.png        final display-sized output (on success)

Queued jobs wait in a FIFO deque bounded by `queue_limit`; at most
`workers` jobs run concurrently. On restart every directory is reloaded:
jobs that were running are marked failed ("interrupted"), queued jobs are
re-enqueued in submission order.
"""

from __future__ import annotations

import datetime as dt
import json
import secrets
import threading
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import ccm
from ..errors import CcmTuneError
from ..image import decode_image, display_sized, encode_display
from ..optimizer import config_from_dict, config_to_dict, tune
from .config import BackendRegistry, ServiceConfig

TERMINAL = ("done", "failed")


class QueueFullError(CcmTuneError):
    pass


class UnknownJobError(KeyError):
    pass


class NoSnapshotError(CcmTuneError):
    pass


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class Job:
    id: str
    dir: Path
    status: str
    config_doc: dict
    submitted_at: str
    updated_at: str
    error: Optional[str] = None
    progress_iteration: int = 0
    total_iterations: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def meta_dict(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "submitted_at": self.submitted_at,
            "updated_at": self.updated_at,
            "error": self.error,
            "progress_iteration": self.progress_iteration,
            "total_iterations": self.total_iterations,
        }

    def view(self) -> dict:
        doc = self.meta_dict()
        doc["config"] = self.config_doc
        doc["progress"] = {"iteration": self.progress_iteration,
                           "total": self.total_iterations}
        artifacts = {}
        for key, name in (("input", "input.png"), ("trajectory", "trajectory.jsonl"),
                          ("snapshots", "snapshots.json"), ("matrix", "matrix.json"),
                          ("preview", "preview.png")):
            if (self.dir / name).exists():
                artifacts[key] = name
        doc["artifacts"] = artifacts
        return doc


class JobStore:

    def __init__(self, config: ServiceConfig, registry: Optional[BackendRegistry] = None):
        self.config = config
        self.registry = registry or BackendRegistry(config.backends)
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._jobs: dict[str, Job] = {}
        self._pending: deque[str] = deque()
        self._lock = threading.Lock()
        self._wakeup = threading.Condition(self._lock)
        self._stop = False
        self._threads: list[threading.Thread] = []
        self._recover()

    # -- lifecycle ----------------------------------------------------------

    def start(self):
        for i in range(self.config.workers):
            t = threading.Thread(target=self._worker_loop, name=f"tune-worker-{i}",
                                 daemon=True)
            t.start()
            self._threads.append(t)

    def shutdown(self):
        with self._wakeup:
            self._stop = True
            self._wakeup.notify_all()
        for t in self._threads:
            t.join(timeout=5.0)
        self._threads.clear()

    def _recover(self):
        recovered = []
        for meta_path in sorted(self.data_dir.glob("*/meta.json")):
            try:
                meta = json.loads(meta_path.read_text())
                config_doc = json.loads((meta_path.parent / "config.json").read_text())
            except (OSError, json.JSONDecodeError):
                continue
            job = Job(
                id=meta["id"],
                dir=meta_path.parent,
                status=meta["status"],
                config_doc=config_doc,
                submitted_at=meta.get("submitted_at", _now()),
                updated_at=meta.get("updated_at", _now()),
                error=meta.get("error"),
                progress_iteration=int(meta.get("progress_iteration", 0)),
                total_iterations=int(meta.get("total_iterations", 0)),
            )
            if job.status == "running":
                job.status = "failed"
                job.error = "interrupted"
                job.updated_at = _now()
                self._persist_meta(job)
            self._jobs[job.id] = job
            if job.status == "queued":
                recovered.append(job)
        recovered.sort(key=lambda j: j.submitted_at)
        self._pending.extend(j.id for j in recovered)

    # -- submission and queries ----------------------------------------------

    def submit(self, image_bytes: bytes, config_doc: dict) -> str:
        config = config_from_dict(config_doc)  # raises ConfigError on bad fields
        self.registry.spec(config.backend)     # raises KeyError on unknown name
        img = decode_image(image_bytes)        # raises DecodeError

        job_id = secrets.token_hex(8)
        job_dir = self.data_dir / job_id
        with self._wakeup:
            if len(self._pending) >= self.config.queue_limit:
                raise QueueFullError(
                    f"queue limit of {self.config.queue_limit} jobs reached")
            job_dir.mkdir(parents=True)
            now = _now()
            job = Job(id=job_id, dir=job_dir, status="queued",
                      config_doc=config_to_dict(config),
                      submitted_at=now, updated_at=now,
                      total_iterations=config.iterations)
            (job_dir / "input.png").write_bytes(encode_display(img))
            (job_dir / "config.json").write_text(json.dumps(job.config_doc, indent=2))
            self._persist_meta(job)
            self._jobs[job_id] = job
            self._pending.append(job_id)
            self._wakeup.notify()
        return job_id

    def get(self, job_id: str) -> Job:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJobError(job_id)
        return job

    def list_jobs(self, limit: int = 50, offset: int = 0) -> list[Job]:
        with self._lock:
            ordered = sorted(self._jobs.values(),
                             key=lambda j: j.submitted_at, reverse=True)
        return ordered[offset:offset + limit]

    def queue_depth(self) -> int:
        with self._lock:
            return len(self._pending)

    # -- artifacts ------------------------------------------------------------

    def trajectory_path(self, job_id: str) -> Path:
        return self.get(job_id).dir / "trajectory.jsonl"

    def matrix_text(self, job_id: str) -> str:
        path = self.get(job_id).dir / "matrix.json"
        if not path.exists():
            raise NoSnapshotError("matrix not available yet")
        return path.read_text()

    def preview_png(self, job_id: str, iteration: Optional[int] = None) -> bytes:
        """Apply the nearest-earlier snapshot to a display-sized input copy."""
        job = self.get(job_id)
        snap_path = job.dir / "snapshots.json"
        if not snap_path.exists():
            raise NoSnapshotError("no snapshot recorded yet")
        snapshots = json.loads(snap_path.read_text())
        if not snapshots:
            raise NoSnapshotError("no snapshot recorded yet")
        if iteration is None:
            chosen = snapshots[-1]
        else:
            earlier = [s for s in snapshots if s["iter"] <= iteration]
            if not earlier:
                raise NoSnapshotError(f"no snapshot at or before iteration {iteration}")
            chosen = earlier[-1]
        phi = np.array([chosen["phi"][k] for k in ccm.PHI_KEYS])
        tau = float(job.config_doc.get("tau", 0.25))
        matrix = ccm.materialize(ccm.CcmParams(phi, tau))
        base = display_sized(decode_image((job.dir / "input.png").read_bytes()))
        return encode_display(ccm.apply(matrix, base))

    # -- worker side -----------------------------------------------------------

    def _persist_meta(self, job: Job):
        (job.dir / "meta.json").write_text(json.dumps(job.meta_dict(), indent=2))

    def _transition(self, job: Job, status: str, error: Optional[str] = None):
        with job.lock:
            job.status = status
            job.error = error
            job.updated_at = _now()
            self._persist_meta(job)

    def _worker_loop(self):
        while True:
            with self._wakeup:
                while not self._pending and not self._stop:
                    self._wakeup.wait(timeout=0.5)
                if self._stop:
                    return
                job_id = self._pending.popleft()
            try:
                self._run_job(self._jobs[job_id])
            except Exception:  # defensive: a worker must never die
                job = self._jobs.get(job_id)
                if job is not None and job.status not in TERMINAL:
                    self._transition(job, "failed", "internal worker error")

    def _run_job(self, job: Job):
        self._transition(job, "running")
        try:
            config = config_from_dict(job.config_doc)
            backend = self.registry.get(config.backend)
            img = decode_image((job.dir / "input.png").read_bytes())

            snapshots: list[dict] = []
            trajectory_file = open(job.dir / "trajectory.jsonl", "w", buffering=1)
            try:
                def on_record(rec):
                    trajectory_file.write(rec.to_json() + "\n")
                    job.progress_iteration = rec.iteration

                def on_snapshot(iteration, params):
                    snapshots.append({"iter": iteration, "phi": params.as_dict()})
                    (job.dir / "snapshots.json").write_text(json.dumps(snapshots))

                result = tune(img, config, backend,
                              on_record=on_record, on_snapshot=on_snapshot)
            finally:
                trajectory_file.close()

            (job.dir / "matrix.json").write_text(
                ccm.matrix_to_json(result.final_matrix, result.final_params))
            preview = encode_display(
                ccm.apply(result.final_matrix, display_sized(img)))
            (job.dir / "preview.png").write_bytes(preview)
            self._transition(job, "done")
        except Exception as exc:
            self._transition(job, "failed", str(exc) or type(exc).__name__)
