"""
Random birefringence profiles for a fiber, in dimensionless units.

A profile is a chain of segments with random lengths, each carrying a random
accumulated relative phase. Inside a segment the phase grows at a constant
rate, so waveplates may sit anywhere, including mid-segment.

Lengths are measured in units of the mean segment length's scale, phases in
radians; the physical wavelength and birefringence only enter through the
choice of these numbers.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64
# Segments are drawn in fixed-size blocks so a longer fiber with the same
# stream extends the profile of a shorter one.
DRAW_BLOCK = 64


class ProfileError(ValueError):
    """Raised for invalid noise parameters, profiles or integration intervals."""


@dataclass(frozen=True)
class NoiseParams:
    mean_seg_len: float = 1.0
    sigma_seg_len: float = 0.3
    sigma_phase: float = 1.0
    mean_phase: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("mean_seg_len", "sigma_seg_len", "sigma_phase", "mean_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ProfileError(f"{name} must be finite")
        if self.mean_seg_len <= 0:
            raise ProfileError("mean_seg_len must be > 0")
        if self.sigma_seg_len < 0:
            raise ProfileError("sigma_seg_len must be >= 0")
        if self.sigma_phase < 0:
            raise ProfileError("sigma_phase must be >= 0")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ProfileError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class FiberProfile:
    """
    Piecewise-constant phase rate along the fiber.

    `lengths[i]` and `rates[i]` describe segment i; the last segment may run
    past `total_length`, integration always stops there.
    """
    lengths: np.ndarray
    rates: np.ndarray
    total_length: float
    boundaries: np.ndarray = field(init=False, repr=False)
    cumulative_phase: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lengths = np.array(self.lengths, dtype=float)
        rates = np.array(self.rates, dtype=float)
        if lengths.ndim != 1 or lengths.shape != rates.shape or lengths.size == 0:
            raise ProfileError("A profile needs matching, non-empty length and rate arrays")
        if not (np.all(np.isfinite(lengths)) and np.all(np.isfinite(rates))):
            raise ProfileError("Segment lengths and rates must be finite")
        if np.any(lengths <= 0):
            raise ProfileError("Every segment length must be > 0")
        if not (math.isfinite(self.total_length) and self.total_length > 0):
            raise ProfileError("total_length must be > 0")
        boundaries = np.concatenate(([0.0], np.cumsum(lengths)))
        if boundaries[-1] < self.total_length:
            raise ProfileError(
                f"Segments cover {boundaries[-1]!r}, shorter than total_length {self.total_length!r}"
            )
        cumulative = np.concatenate(([0.0], np.cumsum(lengths * rates)))
        for name, arr in (("lengths", lengths), ("rates", rates),
                          ("boundaries", boundaries), ("cumulative_phase", cumulative)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def segment_count(self) -> int:
        return int(self.lengths.size)

    def segment_phases(self) -> np.ndarray:
        return self.lengths * self.rates

    def phase_at(self, x) -> np.ndarray:
        """Integrated phase from 0 to x (scalar or array), no range checks."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.boundaries, x, side="right") - 1, 0, self.segment_count - 1)
        return self.cumulative_phase[idx] + self.rates[idx] * (x - self.boundaries[idx])


def profile_stream(seed: int, stream_index: int) -> np.random.Generator:
    """Counter-based generator for realization `stream_index` of run `seed`."""
    if not 0 <= stream_index < SEED_LIMIT:
        raise ProfileError("stream_index must be a 64-bit unsigned integer")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(stream_index,))
    return np.random.Generator(np.random.Philox(seq))


def sample_profile(p: NoiseParams, fiber_length: float, stream_index: int) -> FiberProfile:
    """
    Draws one random profile covering [0, fiber_length].

    Segment lengths are Gaussian(mean_seg_len, sigma_seg_len) with
    non-positive draws rejected; each segment's phase is
    Gaussian(mean_phase, sigma_phase). Segments are added until they reach
    fiber_length. The result depends only on (p.seed, stream_index).
    """
    if not (math.isfinite(fiber_length) and fiber_length > 0):
        raise ProfileError(f"fiber_length must be > 0, got {fiber_length!r}")
    rng = profile_stream(p.seed, stream_index)
    lengths: list[np.ndarray] = []
    phases: list[np.ndarray] = []
    while True:
        draws = rng.normal(p.mean_seg_len, p.sigma_seg_len, DRAW_BLOCK)
        accepted = draws[draws > 0]
        lengths.append(accepted)
        phases.append(rng.normal(p.mean_phase, p.sigma_phase, accepted.size))
        # same summation order as FiberProfile.boundaries
        ends = np.cumsum(np.concatenate(lengths))
        if ends.size and ends[-1] >= fiber_length:
            break
    all_phases = np.concatenate(phases)
    keep = int(np.searchsorted(ends, fiber_length, side="left")) + 1
    seg_lengths = np.concatenate(lengths)[:keep]
    logger.debug("stream %d: %d segments over length %g", stream_index, keep, fiber_length)
    return FiberProfile(seg_lengths, all_phases[:keep] / seg_lengths, fiber_length)


def constant_profile(rate: float, length: float) -> FiberProfile:
    """A single segment with a uniform phase rate."""
    return FiberProfile(np.array([length]), np.array([rate]), length)


def profile_from_segments(segments: Sequence[tuple[float, float]], total_length: float | None = None) -> FiberProfile:
    """Builds a profile from (length, phase_rate) pairs."""
    lengths = np.array([s[0] for s in segments], dtype=float)
    rates = np.array([s[1] for s in segments], dtype=float)
    if total_length is None:
        total_length = float(np.sum(lengths))
    return FiberProfile(lengths, rates, total_length)


def _check_interval(f: FiberProfile, a: float, b: float):
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ProfileError("Interval ends must be finite")
    if a < 0 or b > f.total_length:
        raise ProfileError(f"Interval [{a!r}, {b!r}] leaves the fiber [0, {f.total_length!r}]")
    if a > b:
        raise ProfileError(f"Reversed interval [{a!r}, {b!r}]")


def accumulated_phase(f: FiberProfile, a: float, b: float) -> float:
    """Relative phase picked up between positions a and b."""
    _check_interval(f, a, b)
    if a == b:
        return 0.0
    phi_a, phi_b = f.phase_at([a, b])
    return float(phi_b - phi_a)


def signed_phase(f: FiberProfile, boundaries: Sequence[float]) -> float:
    """
    Net relative phase under ideal pi-pulses at the interior boundaries.

    The sign of the accumulated phase flips at every pulse, so the result is
    sum_m (-1)^m * accumulated_phase(f, x_m, x_{m+1}).
    """
    xs = np.asarray(boundaries, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ProfileError("signed_phase needs at least the two fiber ends")
    if np.any(np.diff(xs) < 0):
        raise ProfileError("Boundaries must be sorted")
    _check_interval(f, float(xs[0]), float(xs[-1]))
    pieces = np.diff(f.phase_at(xs))
    signs = np.where(np.arange(pieces.size) % 2 == 0, 1.0, -1.0)
    return math.fsum(signs * pieces)


def profile_to_json(f: FiberProfile) -> str:
    """Debug/golden format: total length plus the segments array."""
    payload = {
        "total_length": f.total_length,
        "segments": [
            {"length": float(length), "phase_rate": float(rate)}
            for length, rate in zip(f.lengths, f.rates)
        ],
    }
    return json.dumps(payload, indent=2)


def profile_from_json(text: str) -> FiberProfile:
    data = json.loads(text)
    segments = [(s["length"], s["phase_rate"]) for s in data["segments"]]
    return profile_from_segments(segments, data["total_length"])
