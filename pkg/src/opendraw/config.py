"""Run-configuration files: INI sections with typed, strictly-checked keys.

A configuration is flat key-value text with one section per concern
(tension, geometry, material, cracks, spacing, run, plus subcommand-specific
sections).  Unknown sections or keys are hard errors with field-level
diagnostics, because a silently ignored typo in a sweep axis is the main
operational hazard of batch runs.  Values may be single numbers or
comma-separated lists where a sweep axis is allowed.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path

from .errors import ConfigError

ENV_PREFIX = "OPENDRAW_"

_FLOAT = "float"
_FLOAT_LIST = "float_list"
_INT = "int"
_STR = "str"

# (type, required, default); None default means the key may be absent
_COMMON = {
    "tension": {
        "t0": (_FLOAT_LIST, True, None),
        "c_t": (_FLOAT_LIST, False, [0.0]),
        "a": (_FLOAT, False, 1.0),
    },
    "geometry": {
        "span": (_FLOAT, True, None),
        "half_width": (_FLOAT, True, None),
        "thickness": (_FLOAT, True, None),
    },
    "material": {
        "youngs": (_FLOAT, True, None),
        "g_c": (_FLOAT, True, None),
    },
    "cracks": {
        "mean_length": (_FLOAT_LIST, True, None),
        "shape": (_FLOAT, False, 0.8),
    },
    "spacing": {
        "model": (_STR, True, None),
        "pitch": (_FLOAT_LIST, False, None),
        "p_s": (_FLOAT, False, None),
        "zone": (_FLOAT_LIST, False, None),
        "rate": (_FLOAT_LIST, False, None),
        "mean_gap": (_FLOAT_LIST, False, None),
        "cv": (_FLOAT, False, None),
        "shift": (_FLOAT, False, None),
    },
    "run": {
        "band_length": (_FLOAT, True, None),
        "samples": (_INT, False, 100),
        "inner": (_INT, False, 20000),
        "seed": (_INT, False, 0),
        "threads": (_INT, False, 1),
        "weight_table": (_STR, False, None),
    },
}

_SCHEMAS = {
    "reliability": _COMMON,
    "critical-tension": {
        **_COMMON,
        "critical": {
            "target": (_FLOAT, True, None),
            "bracket_low": (_FLOAT, False, None),
            "bracket_high": (_FLOAT, False, None),
            "tol": (_FLOAT, False, 1e-3),
        },
    },
    "first-passage": {
        **{k: v for k, v in _COMMON.items() if k != "spacing" and k != "cracks"},
        "first_passage": {
            "boundaries_sd": (_FLOAT_LIST, True, None),
            "s_values": (_FLOAT_LIST, True, None),
            "start_quantiles": (_FLOAT_LIST, False, [0.5]),
            "paths": (_INT, False, 100000),
            "step": (_FLOAT, False, 1e-3),
        },
    },
    "validate": {
        "run": {
            "seed": (_INT, False, 0),
            "level": (_STR, False, "quick"),
        },
    },
}


def _coerce(raw: str, kind: str, where: str, problems: list[str]):
    raw = raw.strip()
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            return int(raw)
        if kind == _FLOAT_LIST:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if not parts:
                raise ValueError("empty list")
            return [float(p) for p in parts]
        return raw
    except ValueError:
        problems.append(f"{where}: cannot parse {raw!r} as {kind}")
        return None


def load_config(source, subcommand: str) -> dict:
    """Parse and validate a config file (path or raw text) for a subcommand.

    Returns nested plain dicts matching the service request layout.  Raises
    ConfigError carrying one diagnostic per offending field.
    """
    schema = _SCHEMAS.get(subcommand)
    if schema is None:
        raise ConfigError([f"unknown subcommand {subcommand!r}"])
    parser = configparser.ConfigParser(interpolation=None)
    try:
        if isinstance(source, (str, Path)) and "\n" not in str(source):
            read = parser.read(source)
            if not read:
                raise ConfigError([f"config file {source!r} not found"])
        else:
            parser.read_string(str(source))
    except configparser.Error as exc:
        raise ConfigError([f"config parse error: {exc}"]) from None

    problems: list[str] = []
    out: dict = {}
    for section in parser.sections():
        if section not in schema:
            problems.append(f"[{section}]: unknown section")
            continue
        keys = schema[section]
        got: dict = {}
        for key, raw in parser.items(section):
            if key not in keys:
                problems.append(f"{section}.{key}: unknown key")
                continue
            val = _coerce(raw, keys[key][0], f"{section}.{key}", problems)
            if val is not None:
                got[key] = val
        out[section] = got

    for section, keys in schema.items():
        got = out.setdefault(section, {})
        for key, (kind, required, default) in keys.items():
            if key in got:
                continue
            if required:
                problems.append(f"{section}.{key}: required key missing")
            elif default is not None:
                got[key] = default
    if problems:
        raise ConfigError(problems)
    return out


def apply_overrides(config: dict, overrides: dict) -> dict:
    """Apply CLI-flag values (already typed) onto the [run] section."""
    run = dict(config.get("run", {}))
    for key, val in overrides.items():
        if val is not None:
            run[key] = val
    config = dict(config)
    config["run"] = run
    return config


def env_overrides(environ=None) -> dict:
    """Flag values mirrored from OPENDRAW_* environment variables."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, kind in (("seed", int), ("threads", int), ("samples", int),
                       ("inner", int)):
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            try:
                out[name] = kind(raw)
            except ValueError:
                raise ConfigError(
                    [f"env {ENV_PREFIX + name.upper()}: cannot parse {raw!r}"]
                ) from None
    return out
