"""TOML run configuration: source, fading model, capacity and protocol settings.

Example::

    [source]
    dsbs = 0.2                      # or: size_x = 2, size_y = 2, joint = [...] (row-major)

    [fading]
    power = 8.0
    noise_var = 1.0
    eta = 0.1
    gain = {type = "rayleigh", scale = 0.7071067811865476}

    [capacity]
    budget_bits = 0.3               # optional; default is C_eta of [fading]
    seed = 0

    [protocol]
    n = 200
    budget_fraction = 0.8           # aux channel optimized for this fraction of C_eta
"""

from __future__ import annotations

import copy
from dataclasses import fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from outage_cr.crcap import AuxChannel
from outage_cr.fading import Constant, Empirical, FadingSpec, GainDistribution, Rayleigh
from outage_cr.protocol import ProtocolConfig
from outage_cr.source import JointSource, dsbs


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


DEFAULT_BUDGET_FRACTION = 0.8

_PROTOCOL_KEYS = {f.name for f in fields(ProtocolConfig)}


def load(path) -> dict:
    """Parse a TOML config; relative empirical-gain paths resolve against its directory."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    gain = cfg.get("fading", {}).get("gain")
    if isinstance(gain, dict) and "path" in gain:
        gain["path"] = str((path.parent / gain["path"]).resolve())
    return cfg


def merge(cfg: dict, section: str, overrides: dict) -> dict:
    """Copy of ``cfg`` with non-None ``overrides`` written into ``section``."""
    out = copy.deepcopy(cfg)
    sec = out.setdefault(section, {})
    for key, value in overrides.items():
        if value is not None:
            sec[key] = value
    return out


def source_from(cfg: dict) -> JointSource:
    sec = cfg.get("source")
    if not sec:
        raise ConfigError("missing [source] section")
    try:
        if "dsbs" in sec:
            return dsbs(float(sec["dsbs"]))
        joint = np.asarray(sec["joint"], dtype=float)
        size_x, size_y = int(sec["size_x"]), int(sec["size_y"])
        if joint.size != size_x * size_y:
            raise ConfigError(f"joint has {joint.size} entries, expected {size_x}x{size_y}")
        return JointSource(joint.reshape(size_x, size_y))
    except KeyError as exc:
        raise ConfigError(f"[source] needs either dsbs or size_x/size_y/joint (missing {exc})") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid source: {exc}") from exc


def gain_from(spec) -> GainDistribution:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("fading.gain must be a table with a 'type' key")
    kind = spec["type"].lower()
    try:
        if kind == "constant":
            return Constant(float(spec["g0"]))
        if kind == "rayleigh":
            if "scale" in spec:
                return Rayleigh(float(spec["scale"]))
            return Rayleigh.unit_power()
        if kind == "empirical":
            if "samples" in spec:
                return Empirical(np.asarray(spec["samples"], dtype=float))
            return Empirical.from_file(spec["path"])
    except KeyError as exc:
        raise ConfigError(f"gain of type {kind!r} is missing {exc}") from exc
    except (OSError, ValueError) as exc:
        raise ConfigError(f"invalid gain model: {exc}") from exc
    raise ConfigError(f"unknown gain type {kind!r}")


def fading_from(cfg: dict) -> FadingSpec:
    sec = cfg.get("fading")
    if not sec:
        raise ConfigError("missing [fading] section")
    try:
        return FadingSpec(
            gain=gain_from(sec.get("gain")),
            power=float(sec.get("power", 1.0)),
            noise_var=float(sec.get("noise_var", 1.0)),
            eta=float(sec.get("eta", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid fading spec: {exc}") from exc


def protocol_from(cfg: dict) -> ProtocolConfig:
    sec = dict(cfg.get("protocol", {}))
    unknown = set(sec) - _PROTOCOL_KEYS - {"budget_fraction", "aux"}
    if unknown:
        raise ConfigError(f"unknown [protocol] keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in sec.items() if k in _PROTOCOL_KEYS}
    if "gain_states" in kwargs:
        kwargs["gain_states"] = tuple(kwargs["gain_states"])
    try:
        return ProtocolConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid protocol config: {exc}") from exc


def aux_from(cfg: dict) -> AuxChannel | None:
    w = cfg.get("protocol", {}).get("aux")
    if w is None:
        return None
    try:
        return AuxChannel(np.asarray(w, dtype=float))
    except ValueError as exc:
        raise ConfigError(f"invalid protocol.aux: {exc}") from exc
