"""Run configuration: a plain ``key = value`` file, overridable from flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    genus: int = 2
    ball_radius: int = 7
    tol_geom: float = 1e-9
    max_elements: int = 8_000_000
    max_bytes: int = 2_000_000_000
    epsilon_policy: str = "systole/16"  # or a positive float
    n_policy: str = "min"  # "min" (N = 2), "inequality" (smallest N meeting the length inequality), or an integer
    cache_dir: str = ".crossnum-cache"
    seed: int = 0

    def __post_init__(self):
        if self.genus != 2:
            raise ConfigError("genus: only genus 2 is implemented")
        if not 1 <= self.ball_radius <= 8:
            raise ConfigError("ball_radius must be in 1..8")
        if not 0 < self.tol_geom < 1e-3:
            raise ConfigError("tol_geom must be in (0, 1e-3)")
        if self.max_elements < 1 or self.max_bytes < 1:
            raise ConfigError("resource caps must be positive")
        if self.epsilon_policy != "systole/16":
            try:
                if float(self.epsilon_policy) <= 0:
                    raise ValueError
            except ValueError:
                raise ConfigError("epsilon_policy must be 'systole/16' or a positive number") from None
        if self.n_policy not in ("min", "inequality"):
            try:
                if int(self.n_policy) < 2:
                    raise ValueError
            except ValueError:
                raise ConfigError("n_policy must be 'min', 'inequality' or an integer >= 2") from None

    def epsilon(self, systole: float) -> float:
        return systole / 16 if self.epsilon_policy == "systole/16" else float(self.epsilon_policy)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **_coerce(changes))


_FIELDS = {f.name: f for f in dataclasses.fields(Config)}


def _coerce(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        kind = _FIELDS[key].type
        try:
            if kind == "int":
                out[key] = int(value)
            elif kind == "float":
                out[key] = float(value)
            else:
                out[key] = str(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return out


def parse_config(text: str) -> Config:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return Config(**_coerce(raw))


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
