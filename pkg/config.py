"""
Experiment configuration: a single JSON document, validated strictly.

Unknown keys are rejected at every level, physical parameters are checked
against the invariants of the objects they build, and every failure maps to
a distinct process exit code.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from ensemble import ExperimentConfig, SequenceDescriptor
from fiber import NoiseParams
from filters import SPECTRAL_KINDS, SpectralModel
from jones import NAMED_STATES, jones_state, named_state
from sequences import SEQUENCE_KINDS, PulseError

EXIT_OK = 0
EXIT_MISSING_FILE = 2
EXIT_SYNTAX = 3
EXIT_UNKNOWN_KEY = 4
EXIT_INVALID_VALUE = 5
EXIT_NUMERICAL = 10


class ConfigError(Exception):
    exit_code = EXIT_INVALID_VALUE


class MissingConfigError(ConfigError):
    exit_code = EXIT_MISSING_FILE


class ConfigSyntaxError(ConfigError):
    exit_code = EXIT_SYNTAX


class UnknownKeyError(ConfigError):
    exit_code = EXIT_UNKNOWN_KEY

    def __init__(self, key: str, where: str):
        super().__init__(f"unknown key {key!r} in {where}")
        self.key = key


class InvalidValueError(ConfigError):
    exit_code = EXIT_INVALID_VALUE


DEFAULTS: dict[str, Any] = {
    "input_state": "PLUS45",
    "fiber_length": 8.0,
    "noise": {
        "mean_seg_len": 1.0,
        "sigma_seg_len": 0.3,
        "sigma_phase": 1.0,
        "mean_phase": 0.0,
    },
    "sequence": {"kind": "CPMG", "n_pulses": 4, "cycles": 1, "positions": []},
    "pulse_error": {"rotation_error": 0.0, "axis_angle": 0.0},
    "ensemble_size": 4096,
    "base_seed": 20100601,
    "sweep": {
        "waveplate_counts": [0, 4, 8, 16, 32, 64],
        "count_mode": "total",
        "lengths": [8.0, 16.0, 32.0, 64.0],
        "waveplates_per_unit_length": 0.5,
        "fidelity_floor": 0.95,
        "sigma_len_grid": [0.0, 0.125, 0.25, 0.375, 0.5],
        "sigma_phase_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
        "target_fidelity": 0.99,
        "max_count": 1024,
        "rotation_errors": [0.0, 0.05, 0.1, 0.2],
    },
    "spectrum": {
        "kind": "LORENTZIAN",
        "amplitude": 1.0,
        "correlation_scale": 1.0,
        "scale_with_length": False,
        "cutoff_k": None,
        "floor_k": 1e-6,
    },
    "filter_table": {"samples": 200, "kl_step": math.pi / 4},
    "metadata": {},
}

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NON_NEGATIVE = {"type": "number", "minimum": 0}


def _table(properties: dict) -> dict:
    return {"type": "object", "properties": properties, "additionalProperties": False}


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    **_table({
        "input_state": {"oneOf": [
            {"enum": list(NAMED_STATES)},
            {**_table({
                "amp_h": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                "amp_v": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
            }), "required": ["amp_h", "amp_v"]},
        ]},
        "fiber_length": _POSITIVE,
        "noise": _table({
            "mean_seg_len": _POSITIVE,
            "sigma_seg_len": _NON_NEGATIVE,
            "sigma_phase": _NON_NEGATIVE,
            "mean_phase": _NUMBER,
        }),
        "sequence": _table({
            "kind": {"enum": list(SEQUENCE_KINDS)},
            "n_pulses": {"type": "integer", "minimum": 0},
            "cycles": {"type": "integer", "minimum": 1},
            "positions": {"type": "array", "items": _POSITIVE},
        }),
        "pulse_error": _table({"rotation_error": _NUMBER, "axis_angle": _NUMBER}),
        "ensemble_size": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "sweep": _table({
            "waveplate_counts": {"type": "array", "items": _NON_NEGATIVE, "minItems": 1},
            "count_mode": {"enum": ["total", "per_unit_length"]},
            "lengths": {"type": "array", "items": _POSITIVE, "minItems": 1},
            "waveplates_per_unit_length": _POSITIVE,
            "fidelity_floor": {"type": "number", "minimum": 0, "maximum": 1},
            "sigma_len_grid": {"type": "array", "items": _NON_NEGATIVE, "minItems": 1},
            "sigma_phase_grid": {"type": "array", "items": _NON_NEGATIVE, "minItems": 1},
            "target_fidelity": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "max_count": {"type": "integer", "minimum": 2},
            "rotation_errors": {"type": "array", "items": _NUMBER, "minItems": 1},
        }),
        "spectrum": _table({
            "kind": {"enum": list(SPECTRAL_KINDS)},
            "amplitude": _NON_NEGATIVE,
            "correlation_scale": _POSITIVE,
            "scale_with_length": {"type": "boolean"},
            "cutoff_k": {"oneOf": [_POSITIVE, {"type": "null"}]},
            "floor_k": _POSITIVE,
        }),
        "filter_table": _table({
            "samples": {"type": "integer", "minimum": 1},
            "kl_step": _POSITIVE,
        }),
        # echoed in the manifest, never used in computation
        "metadata": _table({
            "wavelength_nm": _POSITIVE,
            "mean_seg_len_physical": _POSITIVE,
            "length_unit": {"type": "string"},
            "note": {"type": "string"},
        }),
    }),
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


@dataclass(frozen=True)
class SweepSettings:
    waveplate_counts: tuple[float, ...]
    count_mode: str
    lengths: tuple[float, ...]
    waveplates_per_unit_length: float
    fidelity_floor: float
    sigma_len_grid: tuple[float, ...]
    sigma_phase_grid: tuple[float, ...]
    target_fidelity: float
    max_count: int
    rotation_errors: tuple[float, ...]


@dataclass(frozen=True)
class SpectrumSettings:
    model: SpectralModel
    scale_with_length: bool

    def model_for(self, fiber_length: float) -> SpectralModel:
        """The spectrum at one grid length; scale_with_length ties the correlation scale to L."""
        if not self.scale_with_length:
            return self.model
        return SpectralModel(self.model.kind, self.model.amplitude, fiber_length,
                             self.model.cutoff_k, self.model.floor_k)


@dataclass(frozen=True)
class FilterTableSettings:
    samples: int
    kl_step: float


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig
    sweep: SweepSettings
    spectrum: SpectrumSettings
    filter_table: FilterTableSettings
    resolved: dict = field(compare=False, repr=False)

    def resolved_dict(self) -> dict:
        """Full configuration with defaults filled in; parses back to an equal RunConfig."""
        return copy.deepcopy(self.resolved)

    def to_json(self) -> str:
        return json.dumps(self.resolved, indent=2, sort_keys=True)


def _merge(defaults: dict, given: dict) -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _location(error) -> str:
    path = "/".join(str(p) for p in error.absolute_path)
    return f"/{path}" if path else "the top level"


def _walk(errors):
    for error in errors:
        yield error
        yield from _walk(error.context or ())


def _non_finite(value: Any, path: tuple = ()):
    """Paths of NaN and infinite numbers; JSON Schema bounds let NaN through."""
    if isinstance(value, float) and not math.isfinite(value):
        yield path
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _non_finite(item, (*path, key))
    elif isinstance(value, list):
        for index, item in enumerate(value):
            yield from _non_finite(item, (*path, index))


def validate_document(data: Any) -> None:
    """Schema check; unknown keys win over other problems so the offending key is named."""
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    for error in _walk(errors):
        if error.validator == "additionalProperties" and isinstance(error.instance, dict):
            known = set(error.schema.get("properties", {}))
            extra = sorted(k for k in error.instance if k not in known)
            raise UnknownKeyError(extra[0], _location(error))
    for path in _non_finite(data):
        location = "/" + "/".join(str(p) for p in path) if path else "the top level"
        raise InvalidValueError(f"invalid value at {location}: numbers must be finite")
    if errors:
        error = errors[0]
        raise InvalidValueError(f"invalid value at {_location(error)}: {error.message}")


def _input_state(spec):
    if isinstance(spec, str):
        return named_state(spec)
    return jones_state(complex(*spec["amp_h"]), complex(*spec["amp_v"]))


def parse_dict(data: Any) -> RunConfig:
    """Validates a decoded document and resolves it against DEFAULTS."""
    validate_document(data)
    resolved = _merge(DEFAULTS, data)
    try:
        noise = resolved["noise"]
        seq = resolved["sequence"]
        experiment = ExperimentConfig(
            input_state=_input_state(resolved["input_state"]),
            noise=NoiseParams(noise["mean_seg_len"], noise["sigma_seg_len"], noise["sigma_phase"],
                              noise["mean_phase"], int(resolved["base_seed"])),
            fiber_length=float(resolved["fiber_length"]),
            sequence=SequenceDescriptor(seq["kind"], int(seq["n_pulses"]), int(seq["cycles"]),
                                        tuple(float(x) for x in seq["positions"])),
            ensemble_size=int(resolved["ensemble_size"]),
            base_seed=int(resolved["base_seed"]),
            pulse_error=PulseError(resolved["pulse_error"]["rotation_error"],
                                   resolved["pulse_error"]["axis_angle"]),
        )
        # surface bad sequences now rather than mid-run
        experiment.sequence.build(experiment.fiber_length)
        sweep = resolved["sweep"]
        spectrum = resolved["spectrum"]
        run = RunConfig(
            experiment=experiment,
            sweep=SweepSettings(
                tuple(sweep["waveplate_counts"]), sweep["count_mode"], tuple(sweep["lengths"]),
                sweep["waveplates_per_unit_length"], sweep["fidelity_floor"],
                tuple(sweep["sigma_len_grid"]), tuple(sweep["sigma_phase_grid"]),
                sweep["target_fidelity"], int(sweep["max_count"]), tuple(sweep["rotation_errors"]),
            ),
            spectrum=SpectrumSettings(
                SpectralModel(spectrum["kind"], spectrum["amplitude"], spectrum["correlation_scale"],
                              spectrum["cutoff_k"], spectrum["floor_k"]),
                spectrum["scale_with_length"],
            ),
            filter_table=FilterTableSettings(int(resolved["filter_table"]["samples"]),
                                             resolved["filter_table"]["kl_step"]),
            resolved=resolved,
        )
    except ValueError as exc:
        raise InvalidValueError(str(exc)) from exc
    return run


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_dict(data)


def with_overrides(run: RunConfig, seed: int | None = None, ensemble_size: int | None = None) -> RunConfig:
    """Applies command-line overrides so they also appear in the config echo."""
    data = run.resolved_dict()
    if seed is not None:
        data["base_seed"] = seed
    if ensemble_size is not None:
        data["ensemble_size"] = ensemble_size
    return parse_dict(data)
