"""Run configuration: defaults, `key = value` files, SPINBATH_* env vars, flags.

Precedence, lowest first: built-in defaults, config file, environment,
command-line flags.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .model import ModelParams, SpinVector, Surface
from .sampling import BOLTZMANN_SCALE
from .splitting import CYCLE, Scheme, VariantPolicy

ENV_PREFIX = "SPINBATH_"


class ConfigError(ValueError):
    """Invalid or unknown configuration entry. ``key`` and ``line`` locate it."""

    exit_code = 2

    def __init__(self, key: str, message: str = "", line: int | None = None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}" if message else f"{key}{where}")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    dt: float = 0.001
    t_end: float = 25.0
    samples: int = 10_000
    seed: int = 20240531
    scheme: Scheme = Scheme.YOSHIDA4
    variant_policy: VariantPolicy = CYCLE
    output: Path | None = None
    stride: int | None = None  # None: about 500 output points
    workers: int = 1
    surface: Surface = Surface.S11
    initial_spin: SpinVector | None = None  # None: the first Monte Carlo draw
    boltzmann_scale: float = BOLTZMANN_SCALE

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt", "must be positive")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ConfigError("t_end", "must be >= 0")
        if self.samples < 1:
            raise ConfigError("samples", "must be >= 1")
        if self.stride is not None and self.stride < 1:
            raise ConfigError("stride", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must fit in an unsigned 64-bit integer")

    @property
    def n_steps(self) -> int:
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ConfigError("t_end", f"{self.t_end} is not a whole number of dt={self.dt} steps")
        return int(n)

    @property
    def output_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.n_steps // 500)


def _parse_spin(text: str) -> SpinVector:
    parts = [float(x) for x in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError("expected three components")
    return SpinVector(*parts)


_PARAM_KEYS = {f.name for f in dataclasses.fields(ModelParams)}
_RUN_PARSERS = {
    "dt": float,
    "t_end": float,
    "samples": int,
    "seed": int,
    "scheme": Scheme.parse,
    "variant_policy": VariantPolicy.parse,
    "output": Path,
    "stride": int,
    "workers": int,
    "surface": Surface.parse,
    "initial_spin": _parse_spin,
    "boltzmann_scale": float,
}
KNOWN_KEYS = frozenset(_PARAM_KEYS | set(_RUN_PARSERS))


def _convert(key: str, raw, line: int | None):
    if not isinstance(raw, str):
        return raw
    try:
        return float(raw) if key in _PARAM_KEYS else _RUN_PARSERS[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(key, str(exc), line) from None


def read_config_file(path: str | Path) -> dict[str, tuple[str, int]]:
    """Raw ``{key: (value, line_number)}`` pairs; '#' starts a comment."""
    entries = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(text, "expected 'key = value'", lineno)
        key, value = (part.strip() for part in text.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in KNOWN_KEYS:
            raise ConfigError(key, "unknown key", lineno)
        entries[key] = (value, lineno)
    return entries


def env_overrides(environ=None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in KNOWN_KEYS:
            raise ConfigError(name, "unknown environment override")
        out[key] = value
    return out


def parse_config(path: str | Path | None = None, overrides: dict | None = None, environ=None) -> RunConfig:
    """Merge defaults, file, environment and ``overrides`` into a RunConfig.

    ``overrides`` holds flag values already keyed by config name; entries
    that are None are ignored so unset flags fall through.
    """
    values: dict[str, tuple[object, int | None]] = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: (v, None) for k, v in env_overrides(environ).items()})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in KNOWN_KEYS:
            raise ConfigError(key, "unknown key")
        values[key] = (value, None)

    converted = {k: _convert(k, v, line) for k, (v, line) in values.items()}
    lines = {k: line for k, (_, line) in values.items()}
    param_kw = {k: v for k, v in converted.items() if k in _PARAM_KEYS}
    run_kw = {k: v for k, v in converted.items() if k not in _PARAM_KEYS}
    try:
        params = ModelParams(**param_kw)
    except ValueError as exc:
        key = next((k for k in param_kw if k in str(exc)), "params")
        raise ConfigError(key, str(exc), lines.get(key)) from None
    try:
        return RunConfig(params=params, **run_kw)
    except ConfigError as exc:
        if exc.line is None and lines.get(exc.key) is not None:
            raise ConfigError(exc.key, "invalid value", lines[exc.key]) from None
        raise
