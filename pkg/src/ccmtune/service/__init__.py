"""HTTP job service: submit tuning jobs, watch trajectories, fetch artifacts."""

from .config import BackendRegistry, ServiceConfig, load_service_config
from .jobs import JobStore, QueueFullError
from .app import create_app

__all__ = [
    "BackendRegistry",
    "ServiceConfig",
    "load_service_config",
    "JobStore",
    "QueueFullError",
    "create_app",
]
