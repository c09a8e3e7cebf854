"""Flat ``key = value`` experiment configuration files.

::

    # two bright EPR pairs
    r = 0.5
    s = 0.3
    beta1 = 2.0
    beta3 = 1.0
    phi1 = 60 deg
    phi2 = 0
    phi3 = 60deg
    phi4 = 0
    kind_12 = EPR
    kind_34 = EPR
    gamma_cavity = 5e6     # optional, Hz

Angles are radians unless suffixed with ``deg``. ``beta2``/``beta4`` may be
given but must equal ``beta1``/``beta3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .experiment import ExperimentConfig, InputKind, UnsupportedConfiguration

__all__ = ["ConfigError", "RunConfig", "dump_config", "load_config", "parse_config"]

REQUIRED_KEYS = ("r", "s", "beta1", "beta3", "phi1", "phi2", "phi3", "phi4", "kind_12", "kind_34")
OPTIONAL_KEYS = ("gamma_cavity", "beta2", "beta4")
ANGLE_KEYS = ("phi1", "phi2", "phi3", "phi4")


class ConfigError(ValueError):
    """Malformed configuration file."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None, source: str = "<config>"):
        self.line = line
        self.key = key
        where = source if line is None else f"{source}:{line}"
        prefix = f"{where}: " + (f"key {key!r}: " if key else "")
        super().__init__(prefix + message)


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig
    gamma_cavity: float | None = None


def _number(text: str, key: str, line: int, source: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"could not parse {text!r} as a number", line, key, source) from None
    if not math.isfinite(value):
        raise ConfigError(f"value must be finite, got {text!r}", line, key, source)
    return value


def _angle(text: str, key: str, line: int, source: str) -> float:
    stripped = text.strip()
    if stripped.lower().endswith("deg"):
        return math.radians(_number(stripped[:-3].strip(), key, line, source))
    return _number(stripped, key, line, source)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse configuration text.

    Raises
    ------
    ConfigError
        On syntax errors, unknown/duplicate/missing keys or bad values.
    UnsupportedConfiguration
        If ``beta2 != beta1`` or ``beta4 != beta3``.
    """
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno, source=source)
        key, value = (part.strip() for part in body.split("=", 1))
        key = key.lower()
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ConfigError("unknown key", lineno, key, source)
        if key in raw:
            raise ConfigError(f"duplicate key (first set on line {raw[key][1]})", lineno, key, source)
        if not value:
            raise ConfigError("empty value", lineno, key, source)
        raw[key] = (value, lineno)

    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError("missing required key(s): " + ", ".join(missing), source=source)

    values: dict[str, object] = {}
    for key, (text_value, lineno) in raw.items():
        if key in ANGLE_KEYS:
            values[key] = _angle(text_value, key, lineno, source)
        elif key.startswith("kind_"):
            try:
                values[key] = InputKind.parse(text_value)
            except ValueError as exc:
                raise ConfigError(str(exc), lineno, key, source) from None
        else:
            values[key] = _number(text_value, key, lineno, source)

    for twin, main in (("beta2", "beta1"), ("beta4", "beta3")):
        if twin in values and values[twin] != values[main]:
            raise UnsupportedConfiguration(
                f"{twin}={values[twin]!r} differs from {main}={values[main]!r}; "
                "pair members must have equal mean amplitudes"
            )
        values.pop(twin, None)

    gamma = values.pop("gamma_cavity", None)
    if gamma is not None and not gamma > 0:
        raise ConfigError("cavity bandwidth must be positive", raw["gamma_cavity"][1], "gamma_cavity", source)
    try:
        experiment = ExperimentConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc), source=source) from None
    return RunConfig(experiment, gamma)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from None
    return parse_config(text, source=str(path))


def dump_config(cfg: RunConfig) -> str:
    """Serialize a resolved config; ``parse_config`` restores it exactly."""
    exp = cfg.experiment
    lines = []
    for f in fields(exp):
        value = getattr(exp, f.name)
        lines.append(f"{f.name} = {value.value if isinstance(value, InputKind) else repr(value)}")
    if cfg.gamma_cavity is not None:
        lines.append(f"gamma_cavity = {cfg.gamma_cavity!r}")
    return "\n".join(lines) + "\n"
