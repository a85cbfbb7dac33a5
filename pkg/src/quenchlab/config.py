"""
Experiment configuration: flat INI sections (model/grid/numerics/scenario)
with strict unknown-key rejection and range validation.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import ChannelGrid, make_grid
from .model import ModelSpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "apply_overrides"]


class ConfigError(ValueError):
    pass


# section -> key -> (converter, validator description, validator)
def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _pow2(v):
    return v >= 8 and (v & (v - 1)) == 0


def _finite(v):
    return math.isfinite(v)


_SCHEMA = {
    "model": {
        "gamma": (float, "finite", _finite),
        "delta_steep": (float, "> 0", _pos),
        "k_halfwidth": (float, "> 0", _pos),
        "k": (float, "> 0", _pos),
        "chi": (str, "'zero'", lambda v: v == "zero"),
    },
    "grid": {
        "m": (float, "> 0", _pos),
        "n_x": (int, "power of two >= 8", _pow2),
        "n_y": (int, "power of two >= 8", _pow2),
    },
    "numerics": {
        "dt": (float, "> 0", _pos),
        "eta": (float, ">= 0", _nonneg),
        "tol": (float, "> 0", _pos),
        "t_max": (float, "> 0", _pos),
        "window": (float, "> 0", _pos),
    },
    "scenario": {
        "c": (float, "> 0", _pos),
        "c_from": (float, "> 0", _pos),
        "c_to": (float, "> 0", _pos),
        "dc": (float, "finite, nonzero", lambda v: _finite(v) and v != 0),
        "seed": (str, "seed kind", lambda v: v in (
            "oblique+", "oblique-", "checkerboard", "stripes", "random")),
        "amplitude": (float, ">= 0", _nonneg),
        "rng_seed": (int, ">= 0", _nonneg),
    },
}

_DEFAULTS = {
    "model": {"gamma": -1.0, "delta_steep": 5.0,
              "k_halfwidth": 10.0 * np.pi, "k": 0.5, "chi": "zero"},
    "grid": {"m": 30.0 * np.pi, "n_x": 1024, "n_y": 64},
    "numerics": {"dt": 5e-3, "eta": 0.2, "tol": 1e-6, "t_max": 2000.0,
                 "window": 20.0},
    "scenario": {"c": 1.0, "c_from": 1.2, "c_to": 1.5, "dc": 0.02,
                 "seed": "checkerboard", "amplitude": 0.05, "rng_seed": 0},
}


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)

    def model_spec(self, c: float | None = None) -> ModelSpec:
        m = self.model
        return ModelSpec(gamma=m["gamma"], delta_steep=m["delta_steep"],
                         K_halfwidth=m["k_halfwidth"], k=m["k"],
                         c=c if c is not None else self.scenario["c"])

    def make_grid(self) -> ChannelGrid:
        g = self.grid
        return make_grid(g["m"], g["n_x"], g["n_y"], self.model["k"])

    def echo(self) -> str:
        """Effective configuration, re-serializable as INI."""
        lines = []
        for section in ("model", "grid", "numerics", "scenario"):
            lines.append(f"[{section}]")
            for key, val in sorted(getattr(self, section).items()):
                lines.append(f"{key} = {val!r}" if isinstance(val, str)
                             else f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


def _line_of(text: str, section: str, key: str) -> str:
    """Best-effort line context for error messages."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and s.split("=")[0].split(":")[0].strip().lower() == key:
            return f"line {i}: {line.strip()}"
    return f"[{section}] {key}"


def _validated(section: str, key: str, raw: str, context: str):
    spec = _SCHEMA[section].get(key)
    if spec is None:
        raise ConfigError(f"unknown key '{key}' in [{section}] ({context})")
    conv, desc, check = spec
    try:
        if conv is int:
            value = int(raw, 0)
        elif conv is float:
            value = float(raw)
        else:
            value = raw.strip()
    except ValueError as exc:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {conv.__name__} "
            f"({context})") from exc
    if not check(value):
        raise ConfigError(
            f"[{section}] {key} = {value!r} out of range; expected {desc} "
            f"({context})")
    return value


def parse_config(path=None, text: str | None = None) -> ExperimentConfig:
    """Strict parse with defaults; empty input yields the full defaults."""
    if text is None:
        if path is None:
            text = ""
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = ExperimentConfig(**{s: dict(d) for s, d in _DEFAULTS.items()})
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            ctx = _line_of(text, sec, key)
            getattr(cfg, sec)[key] = _validated(sec, key, raw, ctx)
    _cross_validate(cfg)
    return cfg


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    """Apply CLI 'section.key=value' strings in order."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"override {item!r} must look like section.key=value")
        dotted, raw = item.split("=", 1)
        section, key = dotted.split(".", 1)
        section, key = section.strip().lower(), key.strip().lower()
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section '{section}' in override {item!r}")
        getattr(cfg, section)[key] = _validated(
            section, key, raw.strip(), f"override {item!r}")
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: ExperimentConfig) -> None:
    if cfg.grid["m"] <= cfg.model["k_halfwidth"]:
        raise ConfigError(
            f"grid m = {cfg.grid['m']} must exceed the quench half-width "
            f"k_halfwidth = {cfg.model['k_halfwidth']}")
