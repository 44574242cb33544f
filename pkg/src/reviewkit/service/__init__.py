"""Service layer: configuration, event-sourced state, and the HTTP API."""

from .config import BadConfig, ServiceConfig, load_config
from .core import ReviewService, State, replay_events
from .events import EventLog, EventRecord, StoreCorrupt

__all__ = [
    "BadConfig",
    "EventLog",
    "EventRecord",
    "ReviewService",
    "ServiceConfig",
    "State",
    "StoreCorrupt",
    "load_config",
    "replay_events",
]
