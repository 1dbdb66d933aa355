"""
Exact 2x2 linear algebra for polarization qubits in the (H, V) basis.

States are Jones vectors, propagators and waveplates are 2x2 unitaries and
ensemble outputs are density matrices. Every value is immutable once built,
so they can be handed to worker processes and shared freely.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

UNITARY_TOL = 1e-12
NORM_TOL = 1e-12
TRACE_TOL = 1e-10

NAMED_STATES = ("PLUS45", "MINUS45", "H", "V")


class InvalidStateError(ValueError):
    """Raised when a state, operator or density matrix breaks its invariants."""


def _frozen(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=complex).reshape(2, 2)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class JonesState:
    amp_h: complex
    amp_v: complex

    def __post_init__(self):
        norm = abs(self.amp_h) ** 2 + abs(self.amp_v) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"Jones state is not normalized (|psi|^2 = {norm!r})")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_h, self.amp_v], dtype=complex)

    def norm(self) -> float:
        return math.sqrt(abs(self.amp_h) ** 2 + abs(self.amp_v) ** 2)

    def with_global_phase(self, theta: float) -> "JonesState":
        phase = cmath.exp(1j * theta)
        return JonesState(self.amp_h * phase, self.amp_v * phase)


@dataclass(frozen=True, eq=False)
class Unitary2:
    matrix: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.matrix)
        if not np.all(np.isfinite(arr)):
            raise InvalidStateError("Operator has non-finite entries")
        if not np.allclose(arr.conj().T @ arr, np.eye(2), rtol=0.0, atol=UNITARY_TOL * 10):
            raise InvalidStateError("Operator is not unitary")
        object.__setattr__(self, "matrix", arr)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(self.matrix @ other.matrix)

    def __eq__(self, other):
        if not isinstance(other, Unitary2):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def dagger(self) -> "Unitary2":
        return Unitary2(self.matrix.conj().T)

    def unitarity_defect(self) -> float:
        """Largest entry of |U^dagger U - I|."""
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(2))))


@dataclass(frozen=True, eq=False)
class DensityMatrix2:
    matrix: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.matrix)
        if not np.allclose(arr, arr.conj().T, rtol=0.0, atol=UNITARY_TOL):
            raise InvalidStateError("Density matrix is not Hermitian")
        trace = np.trace(arr).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"Density matrix trace is {trace!r}, expected 1")
        if np.min(np.linalg.eigvalsh(arr)) < -TRACE_TOL:
            raise InvalidStateError("Density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", arr)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix2):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


IDENTITY = Unitary2(np.eye(2))


def jones_state(amp_h: complex, amp_v: complex) -> JonesState:
    """Builds a normalized state from an arbitrary nonzero amplitude pair."""
    amp_h, amp_v = complex(amp_h), complex(amp_v)
    norm = math.hypot(abs(amp_h), abs(amp_v))
    if not math.isfinite(norm) or norm == 0.0:
        raise InvalidStateError("Cannot normalize a zero or non-finite Jones vector")
    return JonesState(amp_h / norm, amp_v / norm)


def named_state(tag: str) -> JonesState:
    """PLUS45 and MINUS45 are (1, +-1)/sqrt(2); H and V are the basis states."""
    r = 1.0 / math.sqrt(2.0)
    if tag == "PLUS45":
        return JonesState(complex(r), complex(r))
    if tag == "MINUS45":
        return JonesState(complex(r), complex(-r))
    if tag == "H":
        return JonesState(1 + 0j, 0j)
    if tag == "V":
        return JonesState(0j, 1 + 0j)
    raise InvalidStateError(f"Unknown named state: {tag!r} (expected one of {', '.join(NAMED_STATES)})")


def dephasing_propagator(delta_phi: float) -> Unitary2:
    """
    Free propagation that accumulates relative phase delta_phi = phi_H - phi_V.

    The phase is split symmetrically, diag(e^{+i dphi/2}, e^{-i dphi/2});
    only the difference is observable.
    """
    if not math.isfinite(delta_phi):
        raise ValueError(f"delta_phi must be finite, got {delta_phi!r}")
    half = 0.5 * delta_phi
    return Unitary2(np.diag([cmath.exp(1j * half), cmath.exp(-1j * half)]))


def pauli_x_pulse() -> Unitary2:
    """Ideal half-wave plate in the diagonal basis: exp(-i pi/2 sigma_x) = -i sigma_x."""
    return Unitary2(np.array([[0, -1j], [-1j, 0]]))


def pauli_y_pulse() -> Unitary2:
    """exp(-i pi/2 sigma_y) = -i sigma_y."""
    return Unitary2(np.array([[0, -1], [1, 0]], dtype=complex))


def rotation_pulse(angle: float, axis_angle: float = 0.0) -> Unitary2:
    """
    Rotation by `angle` about an equatorial Bloch axis at `axis_angle` from x.

    Used for imperfect waveplates; rotation_pulse(pi, 0) equals pauli_x_pulse()
    up to rounding.
    """
    if not (math.isfinite(angle) and math.isfinite(axis_angle)):
        raise ValueError("Pulse angle and axis must be finite")
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    nx, ny = math.cos(axis_angle), math.sin(axis_angle)
    # c*I - i*s*(nx*sx + ny*sy)
    return Unitary2(np.array([
        [c, -1j * s * (nx - 1j * ny)],
        [-1j * s * (nx + 1j * ny), c],
    ]))


def compose(*unitaries: Unitary2) -> Unitary2:
    """Product of operators given in application order (first applied first)."""
    out = np.eye(2, dtype=complex)
    for u in unitaries:
        out = u.matrix @ out
    return Unitary2(out)


def apply(u: Unitary2, s: JonesState) -> JonesState:
    vec = u.matrix @ s.vector
    norm = math.sqrt(float(np.vdot(vec, vec).real))
    # renormalize only to absorb rounding drift
    return JonesState(complex(vec[0] / norm), complex(vec[1] / norm))


def projector(psi: JonesState) -> DensityMatrix2:
    vec = psi.vector
    return DensityMatrix2(np.outer(vec, vec.conj()))


def accumulate(rho_acc: DensityMatrix2 | None, psi: JonesState, n: int) -> DensityMatrix2:
    """
    Running mean of projectors: folds psi in as the n-th sample.

    rho_acc is the mean of the first n-1 samples and is ignored when n == 1.
    """
    if n < 1:
        raise ValueError("accumulate needs n >= 1")
    proj = projector(psi).matrix
    if n == 1 or rho_acc is None:
        return DensityMatrix2(proj)
    mean = rho_acc.matrix + (proj - rho_acc.matrix) / n
    # restore exact Hermiticity lost to rounding
    return DensityMatrix2(0.5 * (mean + mean.conj().T))


def mean_density(states: Iterable[JonesState]) -> DensityMatrix2:
    """Mean of projectors with compensated summation, independent of grouping."""
    parts: list[list[float]] = [[], [], [], []]
    count = 0
    for psi in states:
        h, v = psi.amp_h, psi.amp_v
        hv = h * v.conjugate()
        parts[0].append(abs(h) ** 2)
        parts[1].append(abs(v) ** 2)
        parts[2].append(hv.real)
        parts[3].append(hv.imag)
        count += 1
    if count == 0:
        raise ValueError("mean_density needs at least one state")
    rho_hh = math.fsum(parts[0]) / count
    rho_vv = math.fsum(parts[1]) / count
    off = complex(math.fsum(parts[2]), math.fsum(parts[3])) / count
    return DensityMatrix2(np.array([[rho_hh, off], [off.conjugate(), rho_vv]]))


def state_fidelity(psi_in: JonesState, psi: JonesState) -> float:
    """|<psi_in|psi>|^2, the fidelity of one pure output."""
    return min(1.0, abs(np.vdot(psi_in.vector, psi.vector)) ** 2)


def fidelity(psi_in: JonesState, rho: DensityMatrix2) -> float:
    """|<psi_in|rho|psi_in>|, clamped to [0, 1] against rounding."""
    vec = psi_in.vector
    value = abs(np.vdot(vec, rho.matrix @ vec))
    return min(1.0, float(value))
