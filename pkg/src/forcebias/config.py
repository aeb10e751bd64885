"""Run configurations loaded from JSON.

Each run file is a JSON object mapped field-by-field onto a frozen dataclass;
unknown keys are rejected and omitted keys take the dataclass defaults.
"""
from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .experiments import CohortConfig
from .servo_sim import ControllerParams, HumanLoad, PlantParams

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ServoRunConfig",
    "from_dict",
    "to_dict",
    "load_config",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServoRunConfig:
    """Servo scenarios: a force step against a stiff load and a disturbance
    injected under position control."""

    controller: ControllerParams = field(default_factory=ControllerParams)
    mismatch: float = 0.2
    plant_friction: float = 0.001
    load: HumanLoad = field(default_factory=lambda: HumanLoad(stiffness=100.0, damping=1.5))
    step_torque: float = 1.0
    seconds: float = 2.0
    steady_window: float = 0.5
    settle_tolerance: float = 0.01
    disturbance: float = 0.5
    disturbance_seconds: float = 0.1
    decimation: int = 10

    def __post_init__(self):
        if not self.seconds > 0 or not self.disturbance_seconds > 0:
            raise ValueError("run lengths must be positive")
        if not 0 < self.steady_window <= self.seconds:
            raise ValueError("steady_window must lie in (0, seconds]")
        if not 0 <= self.mismatch < 1:
            raise ValueError("mismatch must lie in [0, 1)")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")
        if not self.settle_tolerance > 0:
            raise ValueError("settle_tolerance must be positive")

    @property
    def plant(self) -> PlantParams:
        return PlantParams.mismatched(self.controller, self.mismatch, b=self.plant_friction)


def _convert(tp, value, where: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return from_dict(tp, value, where)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, where)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return tuple(_convert(args[0], v, f"{where}[{i}]") for i, v in enumerate(value))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    return value


def from_dict(cls, data: dict, where: str = "config"):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {k: _convert(hints[k], v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def to_dict(obj) -> dict:
    def plain(v):
        if dataclasses.is_dataclass(v):
            return {f.name: plain(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    return plain(obj)


KINDS = {"experiment": CohortConfig, "servo": ServoRunConfig}


def load_config(source: Path | str | dict | None, kind: str, overrides: Optional[dict] = None):
    """Build the run config of ``kind`` from a JSON file or mapping.

    The top-level object may carry ``schema_version`` (must equal
    ``SCHEMA_VERSION``) and ``kind`` (must match).
    """
    if source is None:
        data: dict[str, Any] = {}
    elif isinstance(source, dict):
        data = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be an object")
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    declared = data.pop("kind", kind)
    if declared != kind:
        raise ConfigError(f"config is for {declared!r}, not {kind!r}")
    data.update(overrides or {})
    return from_dict(KINDS[kind], data)
