"""Run configuration: YAML file -> validated, defaults-filled :class:`RunConfig`.

Every section is optional and every default matches the 6-DOF experiment
setup (0.6 m arm, 0.3 m per-link cap, 0.2 m voxels, 30 orientations per
voxel, joint limits of +-3/4 pi).  Example::

    n_joint: 7
    workspace:
      d_voxel: 0.2
      n_rand: 10
    motpe:
      n_total: 2000
      seed: 3
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from pathlib import Path
from typing import Any

import yaml

from .chain_model import DEFAULT_JOINT_LIMIT, LengthBudget, MassParams
from .kinematics import IkConfig
from .motpe import MotpeConfig
from .workspace import WorkspaceSpec


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    n_joint: int = 6
    joint_limit: float = DEFAULT_JOINT_LIMIT
    output_dir: str = "runs/default"
    n_workers: int = 1
    # torque charged to voxels with no IK success
    empty_torque: float = 0.0
    workspace: WorkspaceSpec = WorkspaceSpec()
    ik: IkConfig = IkConfig()
    mass: MassParams = MassParams()
    length: LengthBudget = LengthBudget()
    motpe: MotpeConfig = MotpeConfig()

    def __post_init__(self):
        if self.n_joint < 1:
            raise ConfigError("n_joint: must be >= 1")
        if not 0 < self.joint_limit <= 2 * math.pi:
            raise ConfigError("joint_limit: must be in (0, 2 pi]")
        if self.n_workers < 1:
            raise ConfigError("n_workers: must be >= 1")
        if self.empty_torque < 0:
            raise ConfigError("empty_torque: must be >= 0")

    @property
    def n_params(self) -> int:
        return 2 * self.n_joint - 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Digest of every setting that can change results."""
        d = self.to_dict()
        for k in ("output_dir", "n_workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


PRESETS: dict[str, dict] = {
    # reduced budget for CI-scale runs
    "desk": {"motpe": {"n_total": 2000}, "workspace": {"d_voxel": 0.2, "n_rand": 10}},
}


def _build(cls, data: Any, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in data.items():
        key_path = f"{path}.{key}" if path else str(key)
        if key not in fields:
            raise ConfigError(f"{key_path}: unknown key")
        default = fields[key].default
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, key_path)
        else:
            kwargs[key] = _coerce(value, default, key_path)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def _coerce(value: Any, default: Any, path: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if isinstance(default, tuple):
        return tuple(value)
    return value


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def config_from_dict(data: dict | None, preset: str | None = None) -> RunConfig:
    data = data or {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}")
        data = _merge(PRESETS[preset], data)
    cfg = _build(RunConfig, data, "")
    if cfg.workspace.n_rand < 1:
        raise ConfigError("workspace.n_rand: must be >= 1")
    return cfg


def load_config(path: str | Path | None = None, preset: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Read a YAML config; an empty or missing-path config gives the defaults."""
    data: Any = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    if overrides:
        data = _merge(data, overrides)
    return config_from_dict(data, preset)
