"""Service configuration file and the static backend registry.

Config JSON:

    {
      "data_dir": "/var/lib/ccmtune",
      "workers": 2,
      "queue_limit": 64,
      "backends": [
        {"name": "synthetic", "kind": "synthetic"},
        {"name": "clip", "kind": "remote", "url": "http://127.0.0.1:9090"},
        {"name": "tiny", "kind": "graph", "graph_paths": {"manifest": "m.json"}}
      ],
      "ui_dir": "frontend/dist"        // optional static SPA mount
    }

Environment overrides: CCMTUNE_DATA_DIR, CCMTUNE_WORKERS. CCMTUNE_CONFIG
names the config file itself when the CLI is started without --config.
Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..embedding import RemoteBackend, SyntheticBackend, load_graph_backend

BACKEND_KINDS = ("synthetic", "remote", "graph")


class ServiceConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BackendSpec:
    name: str
    kind: str
    url: Optional[str] = None
    manifest: Optional[Path] = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ServiceConfigError(f"backend kind must be one of {BACKEND_KINDS}")
        if self.kind == "remote" and not self.url:
            raise ServiceConfigError(f"backend {self.name!r}: remote kind requires 'url'")
        if self.kind == "graph" and self.manifest is None:
            raise ServiceConfigError(
                f"backend {self.name!r}: graph kind requires graph_paths.manifest")


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    workers: int = 2
    queue_limit: int = 64
    backends: tuple[BackendSpec, ...] = (BackendSpec("synthetic", "synthetic"),)
    ui_dir: Optional[Path] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ServiceConfigError("workers must be >= 1")
        if self.queue_limit < 1:
            raise ServiceConfigError("queue_limit must be >= 1")
        if not self.backends:
            raise ServiceConfigError("at least one backend must be configured")
        names = [b.name for b in self.backends]
        if len(set(names)) != len(names):
            raise ServiceConfigError("backend names must be unique")


def _parse_backend(doc: dict, base: Path) -> BackendSpec:
    if not isinstance(doc, dict) or "name" not in doc or "kind" not in doc:
        raise ServiceConfigError("each backend needs 'name' and 'kind'")
    manifest = None
    graph_paths = doc.get("graph_paths")
    if isinstance(graph_paths, dict) and "manifest" in graph_paths:
        manifest = Path(graph_paths["manifest"])
        if not manifest.is_absolute():
            manifest = base / manifest
    return BackendSpec(
        name=str(doc["name"]),
        kind=str(doc["kind"]),
        url=doc.get("url"),
        manifest=manifest,
    )


def load_service_config(path=None, env=os.environ) -> ServiceConfig:
    """Load config from `path` (or CCMTUNE_CONFIG), then apply env overrides.

    With no file at all, a synthetic-only config rooted at ./ccmtune-data
    is returned so the service can run with zero setup.
    """
    if path is None:
        path = env.get("CCMTUNE_CONFIG")
    doc = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ServiceConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ServiceConfigError(
                f"config {path} is not valid JSON at line {exc.lineno} "
                f"column {exc.colno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ServiceConfigError(f"config {path} must be a JSON object")
        base = path.parent.resolve()

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    data_dir = resolve(env.get("CCMTUNE_DATA_DIR") or doc.get("data_dir", "ccmtune-data"))
    workers_raw = env.get("CCMTUNE_WORKERS") or doc.get("workers", 2)
    try:
        workers = int(workers_raw)
    except (TypeError, ValueError) as exc:
        raise ServiceConfigError(f"workers must be an integer, got {workers_raw!r}") from exc
    backends_doc = doc.get("backends")
    if backends_doc is None:
        backends = (BackendSpec("synthetic", "synthetic"),)
    else:
        if not isinstance(backends_doc, list):
            raise ServiceConfigError("'backends' must be a list")
        backends = tuple(_parse_backend(b, base) for b in backends_doc)
    ui_dir = resolve(doc["ui_dir"]) if doc.get("ui_dir") else None
    return ServiceConfig(
        data_dir=data_dir,
        workers=workers,
        queue_limit=int(doc.get("queue_limit", 64)),
        backends=backends,
        ui_dir=ui_dir,
    )


class BackendRegistry:
    """Named backends, constructed lazily and cached.

    Remote backends probe their sidecar at first use, so a sidecar that
    comes up after the service does is picked up on the next job.
    """

    def __init__(self, specs):
        self._specs = {spec.name: spec for spec in specs}
        self._instances = {}
        self._lock = threading.Lock()

    def names(self):
        return list(self._specs)

    def spec(self, name: str) -> BackendSpec:
        if name not in self._specs:
            raise KeyError(f"unknown backend {name!r}")
        return self._specs[name]

    def get(self, name: str):
        spec = self.spec(name)
        with self._lock:
            inst = self._instances.get(name)
            if inst is None:
                inst = self._construct(spec)
                self._instances[name] = inst
            return inst

    def _construct(self, spec: BackendSpec):
        if spec.kind == "synthetic":
            return SyntheticBackend()
        if spec.kind == "remote":
            return RemoteBackend(spec.url)
        return load_graph_backend(spec.manifest)

    def describe_all(self) -> list[dict]:
        """Listing for /v1/backends; unreachable backends stay listed."""
        out = []
        for name, spec in self._specs.items():
            entry = {"name": name, "kind": spec.kind, "available": True}
            try:
                entry["descriptor"] = self.get(name).descriptor().as_dict()
            except Exception as exc:
                entry["available"] = False
                entry["error"] = str(exc)
            out.append(entry)
        return out
