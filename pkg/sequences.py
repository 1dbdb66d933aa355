"""
Waveplate placements for dynamical-decoupling sequences along a fiber, and
assembly of the full propagator in propagation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fiber import FiberProfile
from jones import Unitary2, pauli_x_pulse, pauli_y_pulse, rotation_pulse

SEQUENCE_KINDS = ("CPMG", "CP", "PDD", "UDD", "CUSTOM", "NONE")
# CP and CPMG share positions and differ in the waveplate axis.
PULSE_AXES = {"CPMG": "x", "CP": "y", "PDD": "x", "UDD": "x", "CUSTOM": "x", "NONE": "x"}


class SequenceError(ValueError):
    """Raised for malformed pulse sequences or mismatched fiber lengths."""


@dataclass(frozen=True)
class PulseError:
    """
    Systematic waveplate imperfection applied identically to every pulse:
    the rotation angle is pi + rotation_error and the rotation axis is tilted
    by axis_angle in the equatorial plane.
    """
    rotation_error: float = 0.0
    axis_angle: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rotation_error) and math.isfinite(self.axis_angle)):
            raise SequenceError("rotation_error and axis_angle must be finite")

    @property
    def is_ideal(self) -> bool:
        return self.rotation_error == 0.0 and self.axis_angle == 0.0


NO_PULSE_ERROR = PulseError()


@dataclass(frozen=True)
class PulseSequence:
    positions: tuple[float, ...]
    fiber_length: float
    kind: str = "CUSTOM"
    axis: str = "x"

    def __post_init__(self):
        positions = tuple(float(x) for x in self.positions)
        object.__setattr__(self, "positions", positions)
        if self.kind not in SEQUENCE_KINDS:
            raise SequenceError(f"Unknown sequence kind {self.kind!r}")
        if self.axis not in ("x", "y"):
            raise SequenceError(f"Pulse axis must be 'x' or 'y', got {self.axis!r}")
        if not (math.isfinite(self.fiber_length) and self.fiber_length > 0):
            raise SequenceError("fiber_length must be > 0")
        for prev, nxt in zip(positions, positions[1:]):
            if not nxt > prev:
                raise SequenceError("Pulse positions must be strictly increasing")
        if positions and not (0.0 < positions[0] and positions[-1] < self.fiber_length):
            raise SequenceError(f"Pulse positions must lie strictly inside (0, {self.fiber_length!r})")

    @property
    def n_pulses(self) -> int:
        return len(self.positions)

    def fractions(self) -> tuple[float, ...]:
        """Positions normalized by the fiber length."""
        return tuple(x / self.fiber_length for x in self.positions)


def _check_count(n_pulses: int, fiber_length: float):
    if n_pulses < 1:
        raise SequenceError("A pulse sequence needs n_pulses >= 1")
    if not (math.isfinite(fiber_length) and fiber_length > 0):
        raise SequenceError("fiber_length must be > 0")


def cpmg_positions(n_pulses: int, fiber_length: float) -> PulseSequence:
    """x_k = (k - 1/2) L / n for k = 1..n."""
    _check_count(n_pulses, fiber_length)
    positions = [(k - 0.5) * fiber_length / n_pulses for k in range(1, n_pulses + 1)]
    return PulseSequence(tuple(positions), fiber_length, "CPMG", PULSE_AXES["CPMG"])


def cp_positions(n_pulses: int, fiber_length: float) -> PulseSequence:
    """Same placement as CPMG, waveplates about the y axis."""
    _check_count(n_pulses, fiber_length)
    positions = [(k - 0.5) * fiber_length / n_pulses for k in range(1, n_pulses + 1)]
    return PulseSequence(tuple(positions), fiber_length, "CP", PULSE_AXES["CP"])


def pdd_positions(n_pulses: int, fiber_length: float) -> PulseSequence:
    """Evenly spaced: x_k = k L / (n + 1)."""
    _check_count(n_pulses, fiber_length)
    positions = [k * fiber_length / (n_pulses + 1) for k in range(1, n_pulses + 1)]
    return PulseSequence(tuple(positions), fiber_length, "PDD", PULSE_AXES["PDD"])


def udd_positions(n_pulses: int, fiber_length: float) -> PulseSequence:
    """Uhrig placement: x_j = L sin^2(j pi / (2n + 2))."""
    _check_count(n_pulses, fiber_length)
    positions = [
        fiber_length * math.sin(j * math.pi / (2 * n_pulses + 2)) ** 2
        for j in range(1, n_pulses + 1)
    ]
    return PulseSequence(tuple(positions), fiber_length, "UDD", PULSE_AXES["UDD"])


def no_pulses(fiber_length: float) -> PulseSequence:
    return PulseSequence((), fiber_length, "NONE")


def custom_positions(positions: Sequence[float], fiber_length: float) -> PulseSequence:
    return PulseSequence(tuple(positions), fiber_length, "CUSTOM", PULSE_AXES["CUSTOM"])


GENERATORS = {
    "CPMG": cpmg_positions,
    "CP": cp_positions,
    "PDD": pdd_positions,
    "UDD": udd_positions,
}


def repeated_cycles(base: PulseSequence, n_cycles: int) -> PulseSequence:
    """Concatenates n_cycles shifted copies of base; the total length scales with them."""
    if n_cycles < 1:
        raise SequenceError("n_cycles must be >= 1")
    if n_cycles == 1:
        return base
    cycle = base.fiber_length
    positions = [c * cycle + x for c in range(n_cycles) for x in base.positions]
    return PulseSequence(tuple(positions), n_cycles * cycle, base.kind, base.axis)


def sequence_from_descriptor(kind: str, n_pulses: int, fiber_length: float,
                             cycles: int = 1, positions: Sequence[float] | None = None) -> PulseSequence:
    """
    Resolves a config-style description into a sequence over fiber_length.

    With cycles > 1 the base sequence spans fiber_length / cycles and is
    repeated. NONE and n_pulses == 0 give free propagation.
    """
    if kind not in SEQUENCE_KINDS:
        raise SequenceError(f"Unknown sequence kind {kind!r}")
    if cycles < 1:
        raise SequenceError("cycles must be >= 1")
    cycle_length = fiber_length / cycles
    if kind == "NONE" or (kind != "CUSTOM" and n_pulses == 0):
        return no_pulses(fiber_length)
    if kind == "CUSTOM":
        base = custom_positions(positions or (), cycle_length)
    else:
        base = GENERATORS[kind](n_pulses, cycle_length)
    seq = repeated_cycles(base, cycles)
    # keep the requested length exactly; cycles * (L / cycles) may round
    return PulseSequence(seq.positions, fiber_length, seq.kind, seq.axis)


def boundaries(seq: PulseSequence) -> tuple[float, ...]:
    """(0, x_1, ..., x_N, L)"""
    return (0.0, *seq.positions, seq.fiber_length)


def waveplate(seq: PulseSequence, pulse_error: PulseError = NO_PULSE_ERROR) -> Unitary2:
    """The operator every pulse of seq applies."""
    if pulse_error.is_ideal:
        return pauli_x_pulse() if seq.axis == "x" else pauli_y_pulse()
    axis = pulse_error.axis_angle + (0.5 * math.pi if seq.axis == "y" else 0.0)
    return rotation_pulse(math.pi + pulse_error.rotation_error, axis)


def build_propagator(profile: FiberProfile, seq: PulseSequence,
                     pulse_error: PulseError = NO_PULSE_ERROR) -> Unitary2:
    """
    Spatially ordered product of free propagation and waveplates.

    Free stretches between consecutive boundaries contribute
    diag(e^{+i phi/2}, e^{-i phi/2}) with phi the accumulated phase there; a
    waveplate acts at every pulse position. A pulse that lands exactly on a
    segment boundary acts after the phase up to that boundary is collected.
    """
    if seq.fiber_length > profile.total_length:
        raise SequenceError(
            f"Sequence length {seq.fiber_length!r} exceeds profile length {profile.total_length!r}"
        )
    phases = np.diff(profile.phase_at(np.array(boundaries(seq))))
    half = np.exp(0.5j * phases)
    pulse = waveplate(seq, pulse_error).matrix
    # row scaling by (e^{+i phi/2}, e^{-i phi/2}) is the diagonal propagator
    u = np.array([[half[0], 0.0], [0.0, half[0].conjugate()]], dtype=complex)
    for h in half[1:]:
        u = pulse @ u
        u[0, :] *= h
        u[1, :] *= h.conjugate()
    return Unitary2(u)
