"""Schema-validated experiment configuration for the command line.

Each subcommand owns a flat parameter block. Validation is strict: unknown
keys are rejected, values are cast through per-key converters, and file
references are checked before any work starts, so a bad configuration never
produces partial output.
"""

import json
import os
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


_REQUIRED = object()


def _int(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("expected an integer")
    if isinstance(value, float) and not value.is_integer():
        raise ValueError("expected an integer")
    return int(value)


def _float(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("expected a number")
    return float(value)


def _bool(value):
    if not isinstance(value, bool):
        raise ValueError("expected true or false")
    return value


def _str(value):
    if not isinstance(value, str):
        raise ValueError("expected a string")
    return value


def _optional(caster):
    def cast(value):
        return None if value is None else caster(value)

    return cast


def _int_list(value):
    if not isinstance(value, (list, tuple)) or not value:
        raise ValueError("expected a non-empty list of integers")
    return [_int(v) for v in value]


def _float_list(value):
    if not isinstance(value, (list, tuple)) or not value:
        raise ValueError("expected a non-empty list of numbers")
    return [_float(v) for v in value]


def _constants(value):
    if not isinstance(value, dict):
        raise ValueError("expected a name -> value mapping")
    return {_str(k): _float(v) for k, v in value.items()}


def _choice(*options):
    def cast(value):
        value = _str(value)
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value

    return cast


def _flag_string(value):
    value = _str(value)
    if not value or any(ch not in "01" for ch in value):
        raise ValueError("expected a string of 0s and 1s")
    return value


def _gadget(value):
    value = _str(value)
    if value in ("default", "pi2_free"):
        return value
    if not os.path.exists(value):
        raise ValueError(f"gadget file not found: {value}")
    return value


# Per-subcommand schema: key -> (converter, default). _REQUIRED defaults
# must be supplied by the config file or a CLI override.
SCHEMAS = {
    "sample": {
        "n": (_int, 1),
        "k": (_int, 2),
        "gadget": (_gadget, "default"),
        "alpha": (_float, 1.0),
        "shots": (_int, 0),
    },
    "decode-bench": {
        "distances": (_int_list, [3, 5]),
        "rates": (_float_list, [0.01]),
        "trials": (_int, 2000),
    },
    "msd-plan": {
        "eps": (_float, 0.01),
        "target_eps_out": (_float, 1e-9),
        "d": (_int, 3),
        "n": (_optional(_int), None),
        "C": (_float, 1.0),
        "fail_budget": (_float, 1e-9),
    },
    "msd-sim": {
        "protocol": (_choice("15to1", "7to1"), "15to1"),
        "eps_values": (_float_list, [0.005, 0.01, 0.02, 0.04]),
        "shots": (_int, 2000),
        "noise": (_choice("uniform_pauli", "dephasing"), "uniform_pauli"),
    },
    "route": {
        "p": (_int, _REQUIRED),
        "m": (_int, _REQUIRED),
        "flags": (_flag_string, _REQUIRED),
    },
    "estimate": {
        "mode": (_choice("4d", "3d", "threshold"), "4d"),
        "n": (_int, 64),
        "k": (_optional(_int), None),
        "r": (_float, 4.0),
        "d_total": (_int, 6),
        "q_target": (_float, 0.0075),
        "constants": (_constants, {}),
    },
    "pipeline": {
        "n": (_int, 1),
        "k": (_int, 2),
        "gadget": (_choice("auto", "brickwork", "pi2_free"), "auto"),
        "architecture": (_choice("4d", "3d"), "4d"),
        "mode": (_choice("exact_small", "error_model"), "exact_small"),
        "distance": (_int, 1),
        "noise_p_out": (_float, 0.0),
        "eps_T": (_float, 0.0),
        "eps_Y": (_float, 0.0),
        "msd_copies": (_int, 0),
        "y_copies": (_int, 0),
        "skip_distillation": (_bool, False),
        "noiseless": (_bool, False),
        "p_f": (_optional(_float), None),
        "eps_out": (_optional(_float), None),
        "flip_model": (_choice("independent", "union"), "independent"),
        "runs": (_int, 400),
        "shots": (_int, 100000),
    },
}

GLOBAL_KEYS = ("seed", "threads", "out")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved run request: subcommand block plus global settings."""

    subcommand: str
    params: dict
    seed: int
    threads: int
    out: str

    def __post_init__(self):
        if self.subcommand not in SCHEMAS:
            raise ConfigError(f"unknown subcommand: {self.subcommand}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


def schema_keys(subcommand: str):
    """Config keys a subcommand accepts, for help text and round-trips."""
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand: {subcommand}")
    return tuple(SCHEMAS[subcommand])


def load_config_file(path) -> dict:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return raw


def validate_params(subcommand: str, raw: dict) -> dict:
    """Cast and check one subcommand block; rejects unknown keys."""
    schema = SCHEMAS.get(subcommand)
    if schema is None:
        raise ConfigError(f"unknown subcommand: {subcommand}")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(
            f"unknown config keys for {subcommand}: {', '.join(unknown)}"
        )
    params = {}
    for key, (caster, default) in schema.items():
        if key in raw:
            try:
                params[key] = caster(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        elif default is _REQUIRED:
            raise ConfigError(f"{subcommand} requires the {key} key")
        else:
            params[key] = default
    return params


def resolve(subcommand, config_path=None, overrides=None,
            seed=None, threads=None, out=None) -> ExperimentConfig:
    """Merge a config file with CLI overrides into a validated request.

    Precedence: CLI flag > config file > schema default. Global settings
    (seed, threads, out) may live in the file alongside the parameter block.
    """
    raw = {}
    file_globals = {}
    if config_path is not None:
        raw = load_config_file(config_path)
        for key in GLOBAL_KEYS:
            if key in raw:
                file_globals[key] = raw.pop(key)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    params = validate_params(subcommand, raw)
    try:
        resolved_seed = _int(seed if seed is not None else file_globals.get("seed", 0))
        resolved_threads = _int(
            threads if threads is not None else file_globals.get("threads", 1)
        )
    except ValueError as exc:
        raise ConfigError(f"bad global setting: {exc}") from exc
    resolved_out = out if out is not None else file_globals.get("out", ".")
    return ExperimentConfig(
        subcommand=subcommand,
        params=params,
        seed=resolved_seed,
        threads=resolved_threads,
        out=_str(resolved_out),
    )
