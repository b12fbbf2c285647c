"""Experiment configuration: sectioned key-value files, validation, presets."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .channels import CHANNEL_MODELS, ThermalParams
from .circuit import Circuit
from .codes import BB18_PRESET, BBSpec, SurfaceSpec
from .experiments import build_bb_memory, build_surface_memory, instrument_noise

# median coherence times in microseconds (t1, t2)
DEVICE_PRESETS: dict[str, tuple[float, float]] = {
    "boston": (275.27, 338.82),
    "fez": (142.41, 98.43),
    "kingston": (261.36, 131.93),
    "marrakesh": (185.77, 104.16),
    "pittsburgh": (300.0, 324.17),
    "torino": (183.67, 131.48),
    "average": (242.75, 188.165),
}

CODES = ("surface", "bb")
DECODERS = ("lookup", "greedy", "none")
POLICIES = ("before_measure", "around_measure_reset")

SECTIONS: dict[str, tuple[str, ...]] = {
    "code": ("code", "distance", "state", "l", "m", "poly_a", "poly_b", "rounds"),
    "noise": ("t1", "t2", "tau", "p1", "channel_model", "noise_policy", "final_layer_noise"),
    "run": ("shots", "master_seed", "decoder", "output_dir"),
}


class ConfigError(ValueError):
    """Carries every validation failure, not just the first."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def preset_params(name: str, tau: float = 0.0, p1: float = 0.0) -> ThermalParams:
    try:
        t1, t2 = DEVICE_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(DEVICE_PRESETS)}") from None
    return ThermalParams(t1, t2, tau, p1)


def format_poly(poly) -> str:
    return " ".join(f"{i},{j}" for i, j in poly)


def parse_poly(text: str) -> tuple[tuple[int, int], ...]:
    """``"0,0 1,0 0,1"`` -> ``((0, 0), (1, 0), (0, 1))``."""
    terms = []
    for token in text.split():
        parts = token.split(",")
        if len(parts) != 2:
            raise ValueError(f"monomial {token!r} is not 'i,j'")
        terms.append((int(parts[0]), int(parts[1])))
    return tuple(terms)


@dataclass(frozen=True)
class ExperimentConfig:
    code: str = "surface"
    distance: int = 3
    state: str = "0"
    l: int = BB18_PRESET.l
    m: int = BB18_PRESET.m
    poly_a: tuple[tuple[int, int], ...] = BB18_PRESET.poly_a
    poly_b: tuple[tuple[int, int], ...] = BB18_PRESET.poly_b
    rounds: int = 3
    t1: float = 1.0
    t2: float = 1.0
    tau: float = 0.01
    p1: float = 0.0
    channel_model: str = "exact_qpd"
    noise_policy: str = "before_measure"
    final_layer_noise: bool = True
    shots: int = 10_000
    master_seed: int = 0
    decoder: str = "lookup"
    output_dir: str = "results"

    def problems(self) -> list[str]:
        out = []
        if self.code not in CODES:
            out.append(f"code must be one of {CODES}, got {self.code!r}")
        elif self.code == "surface":
            try:
                SurfaceSpec.for_state(self.distance, self.state)
            except ValueError as exc:
                out.append(str(exc))
        else:
            try:
                BBSpec(self.l, self.m, self.poly_a, self.poly_b)
            except ValueError as exc:
                out.append(str(exc))
            if self.state != "0":
                out.append("bb memories are prepared in |0...0> only (state = 0)")
            if self.decoder == "greedy":
                out.append("greedy matching needs a graph-like detector model; use lookup or none for bb")
        if self.rounds < 1:
            out.append(f"rounds must be >= 1, got {self.rounds}")
        try:
            ThermalParams(self.t1, self.t2, self.tau, self.p1)
        except ValueError as exc:
            out.append(str(exc))
        if self.channel_model not in CHANNEL_MODELS:
            out.append(f"channel_model must be one of {CHANNEL_MODELS}, got {self.channel_model!r}")
        if self.noise_policy not in POLICIES:
            out.append(f"noise_policy must be one of {POLICIES}, got {self.noise_policy!r}")
        if self.shots < 1:
            out.append(f"shots must be positive, got {self.shots}")
        if not 0 <= self.master_seed < 2**64:
            out.append("master_seed must fit in an unsigned 64-bit integer")
        if self.decoder not in DECODERS:
            out.append(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if not self.output_dir:
            out.append("output_dir must not be empty")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def params(self) -> ThermalParams:
        return ThermalParams(self.t1, self.t2, self.tau, self.p1)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in SECTIONS.items():
            parser[section] = {k: _format_value(getattr(self, k)) for k in keys}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return format_poly(value)
    return str(value)


def _coerce(key: str, raw: str) -> Any:
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        lowered = raw.lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"expected a boolean, got {raw!r}")
        return lowered in ("true", "1", "yes")
    if key in ("poly_a", "poly_b"):
        return parse_poly(raw)
    return raw


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Parse and validate; every problem is reported at once.

    A ``preset`` key under ``[noise]`` supplies t1/t2 from the device table
    unless they are set explicitly.
    """
    parser = configparser.ConfigParser(interpolation=None)
    problems: list[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from None
    values: dict[str, Any] = {}
    preset = None
    for section in parser.sections():
        if section not in SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in parser[section].items():
            if key == "preset" and section == "noise":
                preset = raw.strip()
                if preset not in DEVICE_PRESETS:
                    problems.append(f"unknown preset {preset!r}")
                continue
            if key not in SECTIONS[section]:
                problems.append(f"unknown key {key!r} in [{section}]")
                continue
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                problems.append(f"{key}: {exc}")
    if preset in DEVICE_PRESETS:
        t1, t2 = DEVICE_PRESETS[preset]
        values.setdefault("t1", t1)
        values.setdefault("t2", t2)
    values.update(overrides or {})
    cfg = ExperimentConfig(**values)
    problems += cfg.problems()
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), overrides)


def build_circuit(cfg: ExperimentConfig) -> Circuit:
    """Memory circuit for ``cfg`` with its noise sites attached."""
    if cfg.code == "surface":
        base = build_surface_memory(SurfaceSpec.for_state(cfg.distance, cfg.state), cfg.rounds)
    else:
        base = build_bb_memory(BBSpec(cfg.l, cfg.m, cfg.poly_a, cfg.poly_b), cfg.rounds)
    return instrument_noise(
        base, cfg.params, cfg.channel_model, cfg.noise_policy, final_layer_noise=cfg.final_layer_noise
    )
