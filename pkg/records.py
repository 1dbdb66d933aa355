"""
This module defines the records written by the experiment runner: the rows
of every result table and the JSON run manifest. They are the canonical,
structured output of the simulator; renderers only format them.
"""
from typing import Dict, List, Literal, Optional, TypedDict, Union

from jsonschema import Draft202012Validator
from typing_extensions import NotRequired

Cell = Union[int, float, str, bool, None]


# Result rows
class EnsembleRow(TypedDict):
    fiber_length: float
    sequence: str
    waveplates: int
    fidelity: float
    std_error: float
    ensemble_size: int


class WaveplateRow(TypedDict):
    waveplates: int
    fidelity: float
    std_error: float
    ensemble_size: int


class LengthRow(TypedDict):
    fiber_length: float
    waveplates: int
    fidelity: float
    std_error: float
    ensemble_size: int


class ContourRow(TypedDict):
    sigma_seg_len: float
    sigma_phase: float
    fidelity: float
    std_error: float
    ensemble_size: int


class ScanRow(TypedDict):
    waveplates: int
    fidelity: float
    std_error: float
    lower_bound: float
    meets_target: bool


class WCurveRow(TypedDict):
    fiber_length: float
    w_free: float
    w_sequence: float


class FilterAuditRow(TypedDict):
    kl: float
    quoted_closed: float
    general: float
    textbook_closed: float
    abs_diff: float
    quoted_singular: bool


class PulseErrorRow(TypedDict):
    rotation_error: float
    fidelity_cp: float
    std_error_cp: float
    fidelity_cpmg: float
    std_error_cpmg: float


Row = Union[EnsembleRow, WaveplateRow, LengthRow, ContourRow, ScanRow, WCurveRow,
            FilterAuditRow, PulseErrorRow]


class PlotHint(TypedDict):
    style: Literal["lines", "errorbars", "heatmap"]
    x: str
    y: List[str]
    xlabel: str
    ylabel: str
    yerr: NotRequired[List[str]]
    z: NotRequired[str]
    logy: NotRequired[bool]


class ResultTable(TypedDict):
    name: str
    header: Dict[str, str]
    columns: List[str]
    rows: List[Row]
    plot: PlotHint


class RunManifest(TypedDict):
    tool_version: str
    subcommand: str
    run_id: str
    base_seed: int
    config_echo: dict
    outputs: List[str]
    results: List[Row]
    wall_time: float
    summary: NotRequired[Dict[str, Cell]]


_ROW_SCHEMA = {
    "type": "object",
    "additionalProperties": {"type": ["number", "string", "boolean", "null"]},
}

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool_version": {"type": "string"},
        "subcommand": {"type": "string"},
        "run_id": {"type": "string", "pattern": "^[0-9a-f]{40}$"},
        "base_seed": {"type": "integer", "minimum": 0},
        "config_echo": {"type": "object"},
        "outputs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "results": {"type": "array", "items": _ROW_SCHEMA},
        "wall_time": {"type": "number", "minimum": 0},
        "summary": {"type": "object", "additionalProperties": {"type": ["number", "string", "boolean", "null"]}},
    },
    "required": ["tool_version", "subcommand", "run_id", "base_seed", "config_echo",
                 "outputs", "results", "wall_time"],
    "additionalProperties": False,
}

_MANIFEST_VALIDATOR = Draft202012Validator(MANIFEST_SCHEMA)


def validate_manifest(manifest: RunManifest) -> None:
    """Raises jsonschema.ValidationError if the manifest is malformed."""
    _MANIFEST_VALIDATOR.validate(manifest)


def summary_value(value: Optional[int]) -> Cell:
    """Search outcomes: a count, or NOT_ACHIEVABLE."""
    return "NOT_ACHIEVABLE" if value is None else value
