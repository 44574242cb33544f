"""Service configuration: one JSON file plus environment overrides.

``REVIEWKIT_PORT`` and ``REVIEWKIT_DATA_DIR`` override the file, so a
deployment can point several processes at different stores without
editing config files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..comments import (
    AdviceItem,
    default_advice_catalog,
    load_advice_items,
    load_destructive_patterns,
)
from ..errors import ReviewKitError
from ..scheduling import (
    DEFAULT_FATIGUE_WINDOWS,
    DEFAULT_HORIZON_DAYS,
    DEFAULT_MAX_CONCURRENT,
    DEFAULT_SLOT_MINUTES,
    DEFAULT_THRESHOLD_MINUTES,
    FatigueWindow,
    windows_from_config,
)
from ..ueq import UEQItemMap, load_item_map, thresholds_from_json

ENV_PORT = "REVIEWKIT_PORT"
ENV_DATA_DIR = "REVIEWKIT_DATA_DIR"


class BadConfig(ReviewKitError):
    def __init__(self, reason: str):
        super().__init__(f"bad config: {reason}")


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    data_dir: str = "./reviewkit-data"
    snapshot_every: int = 200
    auth_token: str | None = None
    max_concurrent_reviews: int = DEFAULT_MAX_CONCURRENT
    reminder_threshold_minutes: int = DEFAULT_THRESHOLD_MINUTES
    slot_minutes: int = DEFAULT_SLOT_MINUTES
    deferral_horizon_days: int = DEFAULT_HORIZON_DAYS
    expertise_half_life_days: float = 90.0
    expert_request_cap: int = 3
    expert_request_expiry_days: int = 14
    stale_session_days: int = 7
    fatigue_windows: tuple[FatigueWindow, ...] = DEFAULT_FATIGUE_WINDOWS
    advice_catalog: list[AdviceItem] = field(default_factory=default_advice_catalog)
    destructive_patterns: list | None = None
    ueq_item_map: UEQItemMap = field(default_factory=load_item_map)
    ueq_thresholds: dict[str, tuple[float, ...]] | None = None

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir)


_INT_FIELDS = {
    "port",
    "snapshot_every",
    "max_concurrent_reviews",
    "reminder_threshold_minutes",
    "slot_minutes",
    "deferral_horizon_days",
    "expert_request_cap",
    "expert_request_expiry_days",
    "stale_session_days",
}


def _config_from_mapping(raw: dict) -> ServiceConfig:
    config = ServiceConfig()
    known_simple = {"host", "data_dir", "auth_token"} | _INT_FIELDS | {
        "expertise_half_life_days"
    }
    for key, value in raw.items():
        if key in _INT_FIELDS:
            try:
                config = replace(config, **{key: int(value)})
            except (TypeError, ValueError):
                raise BadConfig(f"{key} must be an integer, got {value!r}")
        elif key == "expertise_half_life_days":
            config = replace(config, expertise_half_life_days=float(value))
        elif key in known_simple:
            config = replace(config, **{key: value})
        elif key == "fatigue_windows":
            try:
                config = replace(
                    config, fatigue_windows=windows_from_config(value)
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise BadConfig(f"fatigue_windows: {exc}")
        elif key == "advice_catalog":
            try:
                config = replace(config, advice_catalog=load_advice_items(value))
            except (KeyError, TypeError, ValueError) as exc:
                raise BadConfig(f"advice_catalog: {exc}")
        elif key == "destructive_patterns":
            try:
                config = replace(
                    config, destructive_patterns=load_destructive_patterns(value)
                )
            except Exception as exc:
                raise BadConfig(f"destructive_patterns: {exc}")
        elif key == "ueq_item_map":
            try:
                config = replace(
                    config, ueq_item_map=UEQItemMap.from_dict(value)
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise BadConfig(f"ueq_item_map: {exc}")
        elif key == "ueq_thresholds":
            config = replace(config, ueq_thresholds=thresholds_from_json(value))
        else:
            raise BadConfig(f"unknown key {key!r}")
    return config


def load_config(path: str | None = None, env: dict | None = None) -> ServiceConfig:
    """Read the config file (optional) and apply environment overrides."""
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except FileNotFoundError:
            raise BadConfig(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise BadConfig(f"config is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise BadConfig("config root must be a JSON object")
    config = _config_from_mapping(raw)
    if env.get(ENV_PORT):
        try:
            config = replace(config, port=int(env[ENV_PORT]))
        except ValueError:
            raise BadConfig(f"{ENV_PORT} must be an integer")
    if env.get(ENV_DATA_DIR):
        config = replace(config, data_dir=env[ENV_DATA_DIR])
    if config.port < 1 or config.port > 65535:
        raise BadConfig(f"port out of range: {config.port}")
    if config.snapshot_every < 1:
        raise BadConfig("snapshot_every must be positive")
    return config
