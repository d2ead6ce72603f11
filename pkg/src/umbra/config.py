"""Pipeline configuration and the flat ``key = value`` file format.

Example file::

    # umbra.cfg
    n_neighbors = 7
    superpixel_size = 600
    alpha = 0.6
    smoothing = true
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from umbra.detect import DetectConfig
from umbra.relight import RelightConfig

ENV_VAR = "UMBRA_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    relight: RelightConfig = field(default_factory=RelightConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    penumbra_radius: int = 3
    smoothing: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.penumbra_radius < 0:
            raise ConfigError("penumbra_radius must be >= 0")

    def keys(self) -> dict[str, object]:
        out = {}
        for sub in (self.relight, self.detect):
            out.update(dataclasses.asdict(sub))
        out.update(penumbra_radius=self.penumbra_radius, smoothing=self.smoothing, threads=self.threads)
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.keys().items())

    def with_overrides(self, overrides: dict[str, object]) -> "PipelineConfig":
        values = self.keys()
        unknown = set(overrides) - set(values)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        values.update(overrides)
        return from_mapping(values)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _field_types():
    types = {}
    for cls in (RelightConfig, DetectConfig):
        for f in dataclasses.fields(cls):
            types[f.name] = (cls, type(f.default))
    for name, typ in (("penumbra_radius", int), ("smoothing", bool), ("threads", int)):
        types[name] = (PipelineConfig, typ)
    return types


def _coerce(key, raw, typ):
    if not isinstance(raw, str):
        return typ(raw) if typ is not bool else bool(raw)
    text = raw.strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def from_mapping(values: dict[str, object]) -> PipelineConfig:
    types = _field_types()
    parts: dict[type, dict] = {RelightConfig: {}, DetectConfig: {}, PipelineConfig: {}}
    for key, raw in values.items():
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        cls, typ = types[key]
        parts[cls][key] = _coerce(key, raw, typ)
    try:
        return PipelineConfig(
            relight=RelightConfig(**parts[RelightConfig]),
            detect=DetectConfig(**parts[DetectConfig]),
            **parts[PipelineConfig],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_config(path: str | os.PathLike | None = None) -> PipelineConfig:
    """Read a config file; ``None`` falls back to ``$UMBRA_CONFIG`` or defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return PipelineConfig()
    with open(path) as fh:
        return from_mapping(parse_text(fh.read()))
