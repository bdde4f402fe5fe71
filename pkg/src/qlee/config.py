"""Experiment configuration: flat ``key = value`` text with JSON-literal values.

Example::

    config_version = 1
    n_x = 5
    n_y = 5
    l = 0.25
    u_bar = -1.0
    tau = 0.05
    steps = 40
    sources = [[16, 16, 2, 0.5]]

Blank lines and ``#`` comments are ignored.  Relative paths are resolved
against the directory of the config file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .diffops import BoundaryCondition, GridSpec
from .lee import SCHEMES, LeeParams, TrotterSchedule

CONFIG_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    n_x: int = 5
    n_y: int = 5
    l: float = 0.25
    u_bar: float = 0.0
    rho_bar: float = 1.0
    c: float = 1.0
    tau: float = 0.05
    steps: int = 40
    snapshot_every: int = 10
    bc: str = "dirichlet"
    scheme: str = "central"
    obstacle_mask: str | None = None
    obstacle_cells: str | None = None
    obstacle_builtin: str | None = None
    sources: tuple = ((16, 16, 2, 0.5),)
    output_dir: str = "out"
    seed: int = 0
    fdm_tau: float = 0.005
    oracle: bool = False
    config_version: int = CONFIG_VERSION
    base_dir: str = field(default=".", compare=False)

    def grid(self) -> GridSpec:
        return GridSpec(self.n_x, self.n_y, self.l)

    def params(self) -> LeeParams:
        return LeeParams(self.u_bar, self.rho_bar, self.c)

    def schedule(self) -> TrotterSchedule:
        return TrotterSchedule(self.tau, self.steps)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def obstacle(self):
        from .obstacles import decompose_mask, read_cells, read_mask
        from .shapes import builtin_mask

        grid = self.grid()
        if self.obstacle_mask:
            return decompose_mask(read_mask(self.resolve(self.obstacle_mask).read_text(), grid), grid)
        if self.obstacle_cells:
            return read_cells(self.resolve(self.obstacle_cells).read_text(), grid)
        if self.obstacle_builtin:
            return decompose_mask(builtin_mask(self.obstacle_builtin, grid), grid)
        return None


_INT = ("n_x", "n_y", "steps", "snapshot_every", "seed", "config_version")
_FLOAT = ("l", "u_bar", "rho_bar", "c", "tau", "fdm_tau")
_PATH = ("obstacle_mask", "obstacle_cells", "obstacle_builtin")
KEYS = tuple(f.name for f in fields(ExperimentConfig) if f.name != "base_dir")


def _coerce(key, value, line):
    def bad(msg):
        return ConfigError(msg, line, key)

    if key in _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad(f"expected an integer, got {value!r}")
        return value
    if key in _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad(f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise bad("value must be finite")
        return float(value)
    if key in _PATH or key == "output_dir":
        if value is None and key != "output_dir":
            return None
        if not isinstance(value, str):
            raise bad(f"expected a string, got {value!r}")
        return value
    if key == "oracle":
        if not isinstance(value, bool):
            raise bad(f"expected true/false, got {value!r}")
        return value
    if key == "bc":
        try:
            return BoundaryCondition(value).value
        except ValueError:
            raise bad(f"expected one of {[b.value for b in BoundaryCondition]}, got {value!r}") from None
    if key == "scheme":
        if value not in SCHEMES:
            raise bad(f"expected one of {list(SCHEMES)}, got {value!r}")
        return value
    if key == "sources":
        if not isinstance(value, list):
            raise bad("expected a list of [x, y, width, pressure]")
        out = []
        for s in value:
            if (not isinstance(s, list) or len(s) != 4
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in s)):
                raise bad(f"source {s!r} is not [x, y, width, pressure]")
            if not all(math.isfinite(v) for v in s):
                raise bad("source values must be finite")
            out.append((int(s[0]), int(s[1]), int(s[2]), float(s[3])))
        return tuple(out)
    raise bad("unknown field")


def _validate(cfg: ExperimentConfig):
    if cfg.config_version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {cfg.config_version}", key="config_version")
    for key in ("n_x", "n_y", "snapshot_every"):
        if getattr(cfg, key) < 1:
            raise ConfigError("must be >= 1", key=key)
    if cfg.steps < 0:
        raise ConfigError("must be >= 0", key="steps")
    for key in ("l", "tau", "fdm_tau", "rho_bar", "c"):
        if not getattr(cfg, key) > 0:
            raise ConfigError("must be positive", key=key)
    if sum(bool(getattr(cfg, k)) for k in _PATH) > 1:
        raise ConfigError("give at most one of " + ", ".join(_PATH))


def parse_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, rest = line.partition("=")
        key = key.strip()
        if key not in KEYS:
            raise ConfigError("unknown field", lineno, key)
        if key in values:
            raise ConfigError("duplicate field", lineno, key)
        try:
            value = json.loads(rest.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"value is not a JSON literal ({exc.msg})", lineno, key) from None
        values[key] = _coerce(key, value, lineno)
    cfg = ExperimentConfig(**values, base_dir=str(base_dir))
    _validate(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text: every field, fixed order, JSON values."""
    lines = []
    for key in KEYS:
        value = getattr(cfg, key)
        if key == "sources":
            value = [list(s) for s in value]
        lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Apply non-``None`` overrides with the same validation as parsing."""
    clean = {k: _coerce(k, v, None) for k, v in overrides.items() if v is not None}
    out = replace(cfg, **clean)
    _validate(out)
    return out
