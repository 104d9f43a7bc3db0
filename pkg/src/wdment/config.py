"""Run configuration.

Config files are flat ``section.key = value`` lines (TOML dotted keys), e.g.::

    # comment
    grid.spacing = 60.0
    source.p0 = 0.93
    run.seed = 7

Sections: grid, source, link, detector, tomography, schedule, run. Every key
is optional; unknown keys are rejected. ``link.seed`` follows ``run.seed``
unless set explicitly.
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel_grid import GridParams
from .errors import ParamError, require
from .link import LinkParams
from .measure import DetectorParams
from .source import SourceParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TomographyOptions:
    method: str = "mle"
    max_evals: int = 100_000
    subtract_accidentals: bool = False

    def __post_init__(self):
        require(self.method in ("mle", "linear"), "method", "must be 'mle' or 'linear'")
        require(self.max_evals >= 1, "max_evals", "must be >= 1")


@dataclass(frozen=True)
class Schedule:
    realign_every: int = 1  # compensation intervals between drift realignments; 0 = never
    intervals_per_channel: int = 1
    monitor_polarization: str = "H"

    def __post_init__(self):
        require(self.realign_every >= 0, "realign_every", "must be >= 0")
        require(self.intervals_per_channel >= 1, "intervals_per_channel", "must be >= 1")
        require(self.monitor_polarization in tuple("HVDARL"), "monitor_polarization",
                "must be one of H, V, D, A, R, L")


@dataclass(frozen=True)
class RunOptions:
    seed: int = 0
    output_dir: str = "out"
    noiseless: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: GridParams = field(default_factory=GridParams)
    source: SourceParams = field(default_factory=SourceParams)
    link: LinkParams = field(default_factory=LinkParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    tomography: TomographyOptions = field(default_factory=TomographyOptions)
    schedule: Schedule = field(default_factory=Schedule)
    run: RunOptions = field(default_factory=RunOptions)

    @property
    def seed(self) -> int:
        return self.run.seed


_SECTION_TYPES = {
    "grid": GridParams,
    "source": SourceParams,
    "link": LinkParams,
    "detector": DetectorParams,
    "tomography": TomographyOptions,
    "schedule": Schedule,
    "run": RunOptions,
}


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _coerce(path: str, value, annotation: str):
    # Annotations are strings under `from __future__ import annotations`.
    if annotation == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if annotation == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if annotation == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported field type {annotation}")


def build_config(values: dict) -> RunConfig:
    """Validated config from a flat ``{"section.key": value}`` mapping."""
    per_section: dict[str, dict] = {name: {} for name in _SECTION_TYPES}
    for path, value in values.items():
        section, _, key = path.partition(".")
        if section not in _SECTION_TYPES or not key:
            raise ConfigError(f"{path}: unknown key")
        fields = {f.name: f for f in dataclasses.fields(_SECTION_TYPES[section])}
        if key not in fields:
            raise ConfigError(f"{path}: unknown key")
        per_section[section][key] = _coerce(path, value, str(fields[key].type))

    run_seed = per_section["run"].get("seed", RunOptions.seed)
    per_section["link"].setdefault("seed", run_seed)

    built = {}
    for section, cls in _SECTION_TYPES.items():
        try:
            built[section] = cls(**per_section[section])
        except ParamError as exc:
            raise ConfigError(f"{section}.{exc}") from None
    return RunConfig(**built)


def resolve_config_path(path: str | Path) -> Path | None:
    """Filesystem path for ``path``, or a shipped preset such as ``paper``."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".cfg" else f"{p.name}.cfg"
    preset = resources.files("wdment") / "presets" / name
    if preset.is_file():
        return Path(str(preset))
    return None


def parse_config_text(text: str) -> dict:
    try:
        return _flatten(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path is not None:
        p = resolve_config_path(path)
        if p is None:
            raise FileNotFoundError(f"config not found: {path}")
        values = parse_config_text(p.read_text())
    values.update(overrides or {})
    return build_config(values)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for section in _SECTION_TYPES:
        block = getattr(cfg, section)
        for f in dataclasses.fields(block):
            v = getattr(block, f.name)
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, str):
                text = f'"{v}"'
            else:
                text = repr(v)
            lines.append(f"{section}.{f.name} = {text}")
    return "\n".join(lines) + "\n"
