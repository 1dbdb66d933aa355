"""
Monte Carlo fidelity estimation over random fiber profiles, and the parameter
sweeps built on it.

Realization i of a run always draws its profile from stream i of the run's
seed, and per-realization results are reduced in index order with
compensated sums, so an estimate does not depend on how the work was split
between worker processes. Every sweep reuses the same seed at every point
(common random numbers), which keeps neighbouring points comparable.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from fiber import NoiseParams, sample_profile
from jones import JonesState, apply, fidelity, mean_density, named_state, state_fidelity
from sequences import (GENERATORS, NO_PULSE_ERROR, PulseError, PulseSequence,
                       build_propagator, sequence_from_descriptor)

logger = logging.getLogger(__name__)

DEFAULT_ENSEMBLE_SIZE = 4096
CHUNK_SIZE = 256


@dataclass(frozen=True)
class SequenceDescriptor:
    """Config-level description of a waveplate sequence, resolved per fiber length."""
    kind: str = "CPMG"
    n_pulses: int = 4
    cycles: int = 1
    positions: tuple[float, ...] = ()

    def build(self, fiber_length: float) -> PulseSequence:
        return sequence_from_descriptor(self.kind, self.n_pulses, fiber_length,
                                        self.cycles, self.positions)

    def with_count(self, n_pulses: int) -> "SequenceDescriptor":
        """Single-cycle sequence of this family with n_pulses waveplates (0 means none)."""
        kind = self.kind if self.kind in GENERATORS else "CPMG"
        if n_pulses == 0:
            return SequenceDescriptor("NONE", 0)
        return SequenceDescriptor(kind, n_pulses)


@dataclass(frozen=True)
class ExperimentConfig:
    input_state: JonesState = field(default_factory=lambda: named_state("PLUS45"))
    noise: NoiseParams = field(default_factory=NoiseParams)
    fiber_length: float = 8.0
    sequence: SequenceDescriptor = field(default_factory=SequenceDescriptor)
    ensemble_size: int = DEFAULT_ENSEMBLE_SIZE
    base_seed: int = 0
    pulse_error: PulseError = NO_PULSE_ERROR

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if not (math.isfinite(self.fiber_length) and self.fiber_length > 0):
            raise ValueError("fiber_length must be > 0")
        # profiles are always keyed by the run's base seed
        if self.noise.seed != self.base_seed:
            object.__setattr__(self, "noise", replace(self.noise, seed=self.base_seed))


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    std_error: float
    ensemble_size: int

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"Fidelity {self.mean!r} outside [0, 1]")
        if not self.std_error >= 0.0:
            raise ValueError("std_error must be >= 0")

    @property
    def lower_bound(self) -> float:
        """mean - 2 std_error, the figure min_waveplates compares with its target."""
        return self.mean - 2.0 * self.std_error


@dataclass(frozen=True)
class NoiseContour:
    """Fidelity over a (sigma_seg_len x sigma_phase) grid, rows follow sigma_seg_len."""
    sigma_len_axis: tuple[float, ...]
    sigma_phase_axis: tuple[float, ...]
    cells: tuple[tuple[FidelityEstimate, ...], ...]

    def cell(self, i: int, j: int) -> FidelityEstimate:
        return self.cells[i][j]


@dataclass(frozen=True)
class MinWaveplates:
    """
    Outcome of the minimum-waveplate search. `count` is None when no scanned
    count up to max_count met the target.
    """
    target_fidelity: float
    max_count: int
    count: int | None
    scanned: tuple[tuple[int, FidelityEstimate], ...]

    @property
    def achievable(self) -> bool:
        return self.count is not None


def _realize_chunk(args) -> list[tuple[complex, complex, float]]:
    c, seq, start, stop = args
    out = []
    for index in range(start, stop):
        profile = sample_profile(c.noise, c.fiber_length, index)
        psi = apply(build_propagator(profile, seq, c.pulse_error), c.input_state)
        out.append((psi.amp_h, psi.amp_v, state_fidelity(c.input_state, psi)))
    return out


def _chunks(c: ExperimentConfig, seq: PulseSequence):
    for start in range(1, c.ensemble_size + 1, CHUNK_SIZE):
        yield c, seq, start, min(start + CHUNK_SIZE, c.ensemble_size + 1)


def run_ensemble(c: ExperimentConfig, pool=None) -> FidelityEstimate:
    """
    Fidelity between the input state and the ensemble-averaged output.

    Realizations 1..n each propagate the input through their own random
    profile. The estimate is |<psi_in|rho_out|psi_in>| with rho_out the mean
    of the output projectors; std_error is the standard error of the
    per-realization fidelities.

    pool: optional multiprocessing.Pool used to spread realization chunks.
    """
    seq = c.sequence.build(c.fiber_length)
    chunks = list(_chunks(c, seq))
    if pool is None:
        results = [_realize_chunk(chunk) for chunk in chunks]
    else:
        results = pool.map(_realize_chunk, chunks)
    outputs = [row for chunk in results for row in chunk]

    states = (JonesState(h, v) for h, v, _ in outputs)
    rho = mean_density(states)
    n = len(outputs)
    per_run = [f for _, _, f in outputs]
    mean_f = math.fsum(per_run) / n
    if n > 1:
        variance = math.fsum((f - mean_f) ** 2 for f in per_run) / (n - 1)
        std_error = math.sqrt(variance / n)
    else:
        std_error = 0.0
    estimate = FidelityEstimate(fidelity(c.input_state, rho), std_error, n)
    logger.debug("%s n=%d L=%g: F=%.6f +- %.6f", seq.kind, seq.n_pulses, c.fiber_length,
                 estimate.mean, estimate.std_error)
    return estimate


def resolve_count(count: float, fiber_length: float, count_mode: str = "total") -> int:
    """Pulse count for a sweep point; per_unit_length counts scale with the fiber."""
    if count_mode == "total":
        n = int(count)
    elif count_mode == "per_unit_length":
        n = int(round(count * fiber_length))
    else:
        raise ValueError(f"Unknown count_mode {count_mode!r}")
    if n < 0:
        raise ValueError("Waveplate counts must be >= 0")
    return n


def sweep_waveplates(c: ExperimentConfig, waveplate_counts: Iterable[float],
                     count_mode: str = "total", pool=None) -> list[tuple[int, FidelityEstimate]]:
    """Fidelity against the number of waveplates; a count of 0 is free propagation."""
    rows = []
    for count in waveplate_counts:
        n = resolve_count(count, c.fiber_length, count_mode)
        estimate = run_ensemble(replace(c, sequence=c.sequence.with_count(n)), pool)
        logger.info("waveplates=%d F=%.6f +- %.6f", n, estimate.mean, estimate.std_error)
        rows.append((n, estimate))
    return rows


def count_for_density(fiber_length: float, waveplates_per_unit_length: float) -> int:
    """round(density * L) forced even and at least 2."""
    return max(2, 2 * int(round(waveplates_per_unit_length * fiber_length / 2.0)))


def sweep_lengths(c: ExperimentConfig, lengths: Iterable[float],
                  waveplates_per_unit_length: float, pool=None) -> list[tuple[float, int, FidelityEstimate]]:
    """Fidelity against fiber length at a fixed waveplate density."""
    if not waveplates_per_unit_length > 0:
        raise ValueError("waveplates_per_unit_length must be > 0")
    rows = []
    for length in lengths:
        n = count_for_density(length, waveplates_per_unit_length)
        point = replace(c, fiber_length=float(length), sequence=c.sequence.with_count(n))
        estimate = run_ensemble(point, pool)
        logger.info("L=%g waveplates=%d F=%.6f +- %.6f", length, n, estimate.mean, estimate.std_error)
        rows.append((float(length), n, estimate))
    return rows


def contour_noise(c: ExperimentConfig, sigma_len_grid: Sequence[float],
                  sigma_phase_grid: Sequence[float], pool=None) -> NoiseContour:
    """Fidelity over the grid of segment-length and phase standard deviations."""
    cells = []
    for sigma_len in sigma_len_grid:
        row = []
        for sigma_phase in sigma_phase_grid:
            noise = replace(c.noise, sigma_seg_len=float(sigma_len), sigma_phase=float(sigma_phase))
            estimate = run_ensemble(replace(c, noise=noise), pool)
            logger.info("sigma_len=%g sigma_phase=%g F=%.6f", sigma_len, sigma_phase, estimate.mean)
            row.append(estimate)
        cells.append(tuple(row))
    return NoiseContour(tuple(float(s) for s in sigma_len_grid),
                        tuple(float(s) for s in sigma_phase_grid), tuple(cells))


def min_waveplates(c: ExperimentConfig, target_fidelity: float, max_count: int, pool=None) -> MinWaveplates:
    """
    Smallest even waveplate count whose fidelity minus two standard errors
    reaches target_fidelity.

    Counts 2, 4, 8, ... are tried until one passes (the largest even count
    not above max_count is tried last), then the gap below it is bisected
    over even counts.
    """
    if not 0.0 < target_fidelity < 1.0:
        raise ValueError("target_fidelity must be in (0, 1)")
    if max_count < 2:
        raise ValueError("max_count must be >= 2")
    scanned: dict[int, FidelityEstimate] = {}

    def passes(n: int) -> bool:
        if n not in scanned:
            scanned[n] = run_ensemble(replace(c, sequence=c.sequence.with_count(n)), pool)
            logger.info("waveplates=%d F=%.6f +- %.6f", n, scanned[n].mean, scanned[n].std_error)
        return scanned[n].lower_bound >= target_fidelity

    def result(count: int | None) -> MinWaveplates:
        return MinWaveplates(target_fidelity, max_count, count, tuple(sorted(scanned.items())))

    failed, n = 0, 2
    while n <= max_count and not passes(n):
        failed, n = n, n * 2
    if n > max_count:
        top = max_count - max_count % 2
        if top <= failed or not passes(top):
            return result(None)
        n = top
    while n - failed > 2:
        mid = failed + 2 * ((n - failed) // 4)
        if passes(mid):
            n = mid
        else:
            failed = mid
    return result(n)


def sweep_pulse_errors(c: ExperimentConfig, rotation_errors: Iterable[float], n_pulses: int,
                       pool=None) -> list[tuple[float, FidelityEstimate, FidelityEstimate]]:
    """
    Fidelity of CP and CPMG placements under the same systematic waveplate
    rotation error, one row per error value.
    """
    rows = []
    for error in rotation_errors:
        pulse_error = replace(c.pulse_error, rotation_error=float(error))
        cp = run_ensemble(replace(c, sequence=SequenceDescriptor("CP", n_pulses), pulse_error=pulse_error), pool)
        cpmg = run_ensemble(replace(c, sequence=SequenceDescriptor("CPMG", n_pulses), pulse_error=pulse_error), pool)
        logger.info("rotation_error=%g F_CP=%.6f F_CPMG=%.6f", error, cp.mean, cpmg.mean)
        rows.append((float(error), cp, cpmg))
    return rows
