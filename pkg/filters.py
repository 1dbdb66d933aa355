"""
Spectral-domain view of dephasing: filter functions of waveplate sequences,
noise power spectra and the decoherence function

    W(L) = exp(-(1/pi) * integral_0^inf S(k) F(kL) / k^2 dk)

F(kL) = 1/2 |sum_m (-1)^m (e^{ik x_{m+1}} - e^{ik x_m})|^2 with x_0 = 0 and
x_{n+1} = L. With no pulses it reduces to 2 sin^2(kL/2), so the same 1/pi
prefactor covers free propagation.
"""
from __future__ import annotations

import logging
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

logger = logging.getLogger(__name__)

SPECTRAL_KINDS = ("WHITE", "LORENTZIAN", "GAUSSIAN_CORR", "ONE_OVER_K")
CLOSED_FORMS = ("FREE", "CPMG4_CLOSED")
CUTOFF_FACTOR = 200.0
DEFAULT_REL_TOL = 1e-10
ERROR_BUDGET = 1e-8
CPMG4_FRACTIONS = (1 / 8, 3 / 8, 5 / 8, 7 / 8)

# 32 sin^4(z/16) sin^2(z/4) written as a cosine series in z.
_CPMG4_CLOSED_TERMS = (6.0, ((1 / 2, -6.0), (1 / 8, -8.0), (3 / 8, 4.0),
                             (5 / 8, 4.0), (1 / 4, 1.0), (3 / 4, -1.0)))


class QuadratureError(ArithmeticError):
    """The decoherence integral did not reach the requested accuracy."""

    def __init__(self, message: str, exponent: float, error: float, panels: int):
        super().__init__(f"{message} (exponent={exponent!r}, error estimate={error!r}, panels={panels})")
        self.exponent = exponent
        self.error = error
        self.panels = panels


@dataclass(frozen=True)
class SpectralModel:
    kind: str = "LORENTZIAN"
    amplitude: float = 1.0
    correlation_scale: float = 1.0
    cutoff_k: float | None = None
    floor_k: float = 1e-6

    def __post_init__(self):
        if self.kind not in SPECTRAL_KINDS:
            raise ValueError(f"Unknown spectral model {self.kind!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError("amplitude must be >= 0")
        if not (math.isfinite(self.correlation_scale) and self.correlation_scale > 0):
            raise ValueError("correlation_scale must be > 0")
        if self.cutoff_k is not None and not (math.isfinite(self.cutoff_k) and self.cutoff_k > 0):
            raise ValueError("cutoff_k must be > 0")
        if not (math.isfinite(self.floor_k) and self.floor_k > 0):
            raise ValueError("floor_k must be > 0")

    def cutoff_for(self, fiber_length: float) -> float:
        return self.cutoff_k if self.cutoff_k is not None else CUTOFF_FACTOR / fiber_length


@dataclass(frozen=True)
class FilterSpec:
    """Pulse fractions in (0, 1), or one of the named closed forms."""
    fractions: tuple[float, ...] | None = ()
    closed_form: str | None = None

    def __post_init__(self):
        if self.closed_form is not None:
            if self.closed_form not in CLOSED_FORMS:
                raise ValueError(f"Unknown closed form {self.closed_form!r}")
            object.__setattr__(self, "fractions", None)
            return
        fractions = tuple(float(f) for f in (self.fractions or ()))
        _check_fractions(fractions)
        object.__setattr__(self, "fractions", fractions)

    @classmethod
    def free(cls) -> "FilterSpec":
        return cls(())

    @classmethod
    def cpmg4_closed(cls) -> "FilterSpec":
        return cls(None, "CPMG4_CLOSED")

    @classmethod
    def from_sequence(cls, seq) -> "FilterSpec":
        return cls(seq.fractions())

    @property
    def label(self) -> str:
        if self.closed_form:
            return self.closed_form
        return f"pulses@{','.join(f'{f:.6g}' for f in self.fractions)}" if self.fractions else "FREE"

    def evaluate(self, kl):
        if self.closed_form == "CPMG4_CLOSED":
            return filter_cpmg4_closed(kl)
        return filter_general(self.fractions or (), kl)

    def cosine_terms(self) -> tuple[float, list[tuple[float, float]]]:
        """F(z) = w0 + sum_r w_r cos(z r), returned as (w0, [(r, w_r)])."""
        if self.closed_form == "CPMG4_CLOSED":
            w0, terms = _CPMG4_CLOSED_TERMS
            return w0, list(terms)
        return _pairwise_terms(self.fractions or ())


def _check_fractions(fractions: Sequence[float]):
    for f in fractions:
        if not (0.0 < f < 1.0):
            raise ValueError(f"Pulse fraction {f!r} is outside (0, 1)")
    for prev, nxt in zip(fractions, fractions[1:]):
        if not nxt > prev:
            raise ValueError("Pulse fractions must be strictly increasing")


def _edge_coefficients(fractions: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Expands the filter sum into sum_j c_j e^{i z f_j} over (0, fractions..., 1)."""
    n = len(fractions)
    points = np.array([0.0, *fractions, 1.0])
    coeffs = np.empty(n + 2)
    coeffs[0] = -1.0
    coeffs[1:n + 1] = [2.0 * (-1) ** (j - 1) for j in range(1, n + 1)]
    coeffs[n + 1] = (-1.0) ** n
    return points, coeffs


def _pairwise_terms(fractions: Sequence[float]) -> tuple[float, list[tuple[float, float]]]:
    points, coeffs = _edge_coefficients(fractions)
    w0 = 0.5 * float(np.sum(coeffs ** 2))
    grouped: dict[float, list[float]] = defaultdict(list)
    for j in range(points.size):
        for l in range(j + 1, points.size):
            r = float(round(points[l] - points[j], 12))
            grouped[r].append(coeffs[j] * coeffs[l])
    terms = [(r, math.fsum(ws)) for r, ws in sorted(grouped.items())]
    return w0, [(r, w) for r, w in terms if w != 0.0]


def filter_general(fractions: Sequence[float], kl):
    """
    Filter function of pulses at the given fractions of the fiber, at kL.

    Each difference e^{ib} - e^{ia} is evaluated as 2i sin((b-a)/2) e^{i(a+b)/2}
    so small kL keeps full relative precision.
    """
    fractions = tuple(float(f) for f in fractions)
    _check_fractions(fractions)
    z = np.asarray(kl, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("kL must be finite")
    edges = np.array([0.0, *fractions, 1.0])
    lo, hi = edges[:-1], edges[1:]
    signs = np.where(np.arange(lo.size) % 2 == 0, 1.0, -1.0)
    zz = z[..., np.newaxis]
    terms = signs * 2j * np.sin(0.5 * zz * (hi - lo)) * np.exp(0.5j * zz * (hi + lo))
    value = 0.5 * np.abs(np.sum(terms, axis=-1)) ** 2
    return float(value) if value.ndim == 0 else value


def filter_cpmg4_closed(kl):
    """
    Closed form quoted for four CPMG pulses: 8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/4).

    Since sin(kL/2) = 2 sin(kL/4) cos(kL/4) this equals 32 sin^4(kL/16) sin^2(kL/4),
    which is finite at the zeros of cos(kL/4) and is what gets evaluated.
    """
    z = np.asarray(kl, dtype=float)
    value = 32.0 * np.sin(z / 16.0) ** 4 * np.sin(z / 4.0) ** 2
    return float(value) if value.ndim == 0 else value


def filter_cpmg_closed(kl, n_pulses: int):
    """
    Textbook closed form for n CPMG pulses:
    8 sin^4(kL/4n) sin^2(kL/2) / cos^2(kL/2n) for even n, cos^2(kL/2) on top
    for odd n. At zeros of cos(kL/2n) the ratio tends to n^2.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    z = np.asarray(kl, dtype=float)
    top = np.sin(z / 2.0) ** 2 if n_pulses % 2 == 0 else np.cos(z / 2.0) ** 2
    bottom = np.cos(z / (2.0 * n_pulses)) ** 2
    near_pole = bottom < 1e-12
    ratio = np.where(near_pole, float(n_pulses ** 2), top / np.where(near_pole, 1.0, bottom))
    value = 8.0 * np.sin(z / (4.0 * n_pulses)) ** 4 * ratio
    return float(value) if value.ndim == 0 else value


def spectral_density(m: SpectralModel, k):
    """Power spectrum S(k) of the birefringence fluctuations."""
    k = np.asarray(k, dtype=float)
    scale = m.correlation_scale
    if m.kind == "WHITE":
        value = np.full_like(k, m.amplitude)
    elif m.kind == "LORENTZIAN":
        value = m.amplitude * scale / (1.0 + (k * scale) ** 2)
    elif m.kind == "GAUSSIAN_CORR":
        value = m.amplitude * scale * np.exp(-0.5 * (k * scale) ** 2)
    else:
        value = m.amplitude / np.maximum(k, m.floor_k)
    return float(value) if value.ndim == 0 else value


def _small_k_limit(f: FilterSpec, fiber_length: float) -> float:
    """lim_{k->0} F(kL)/k^2 from the cosine expansion."""
    _, terms = f.cosine_terms()
    return -0.5 * fiber_length ** 2 * math.fsum(w * r * r for r, w in terms)


def _quad(func, a, b, abs_tol, rel_tol, **kwargs) -> tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, error = quad(func, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=400, **kwargs)[:2]
        except IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{a!r}, {b!r}] did not converge: {exc}",
                                  float("nan"), float("inf"), 0) from exc
    return value, error


def decoherence_exponent(m: SpectralModel, f: FilterSpec, fiber_length: float, *,
                         rel_tol: float = DEFAULT_REL_TOL,
                         include_tail: bool = True) -> tuple[float, float]:
    """
    (1/pi) integral_0^inf S(k) F(kL)/k^2 dk, with its error estimate.

    [0, cutoff] is split into half-period panels of the fastest oscillation
    and integrated adaptively; beyond the cutoff every cosine component of F
    is integrated to infinity with Fourier-weighted quadrature. A coarse
    first pass sets the absolute tolerances of the accurate one.
    """
    if not (math.isfinite(fiber_length) and fiber_length > 0):
        raise ValueError("fiber_length must be > 0")
    if m.amplitude == 0.0:
        return 0.0, 0.0
    limit0 = _small_k_limit(f, fiber_length)

    def integrand(k: float) -> float:
        if k == 0.0:
            return spectral_density(m, 0.0) * limit0
        return spectral_density(m, k) * f.evaluate(k * fiber_length) / (k * k)

    w0, terms = f.cosine_terms()
    top_freq = max([r for r, _ in terms], default=1.0) * fiber_length
    cutoff = m.cutoff_for(fiber_length)
    edges = np.append(np.arange(0.0, cutoff, math.pi / top_freq), cutoff)
    panels = [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    rough = math.fsum(_quad(integrand, a, b, 0.0, 1e-6)[0] for a, b in panels)
    abs_tol = rel_tol * abs(rough) / (len(panels) + len(terms) + 1)
    values, errors = [], []
    for a, b in panels:
        value, error = _quad(integrand, a, b, abs_tol, rel_tol)
        values.append(value)
        errors.append(error)

    if include_tail:
        def decay(k: float) -> float:
            return spectral_density(m, k) / (k * k)

        value, error = _quad(decay, cutoff, np.inf, abs_tol, rel_tol)
        values.append(w0 * value)
        errors.append(abs(w0) * error)
        for r, w in terms:
            # Fourier integrals only honour the absolute tolerance
            value, error = _quad(decay, cutoff, np.inf, abs_tol / abs(w), rel_tol,
                                 weight="cos", wvar=r * fiber_length)
            values.append(w * value)
            errors.append(abs(w) * error)

    exponent = math.fsum(values) / math.pi
    error = math.fsum(errors) / math.pi
    if error > max(ERROR_BUDGET * abs(exponent), 1e-300):
        raise QuadratureError("decoherence integral did not converge", exponent, error, len(panels))
    logger.debug("W exponent %s=%.12g (+-%.2g) at L=%g", f.label, exponent, error, fiber_length)
    return max(exponent, 0.0), error


def decoherence_w(m: SpectralModel, f: FilterSpec, fiber_length: float, *,
                  rel_tol: float = DEFAULT_REL_TOL, include_tail: bool = True) -> float:
    """Coherence surviving a fiber of length L, in (0, 1]."""
    exponent, _ = decoherence_exponent(m, f, fiber_length, rel_tol=rel_tol, include_tail=include_tail)
    # exp underflows to 0 for very large exponents; W stays positive
    return max(math.exp(-exponent), math.ulp(0.0))


def w_curve(m: SpectralModel | Callable[[float], SpectralModel],
            f: FilterSpec | Callable[[float], FilterSpec],
            lengths: Iterable[float], **kwargs) -> list[tuple[float, float]]:
    """
    (L, W) for each length of the grid, in grid order.

    m and f may also be functions of L, for spectra whose correlation scale
    follows the fiber or sequences whose fractions depend on it.
    """
    rows = []
    for length in lengths:
        length = float(length)
        model = m(length) if callable(m) else m
        spec = f(length) if callable(f) else f
        rows.append((length, decoherence_w(model, spec, length, **kwargs)))
    return rows


def audit_grid(samples: int = 200, kl_step: float = math.pi / 4) -> np.ndarray:
    """kL = 0, step, 2 step, ...; the default step lands on every zero of cos(kL/4)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    return np.arange(samples) * kl_step


def filter_audit_table(samples: int = 200, kl_step: float = math.pi / 4) -> list[dict]:
    """
    Quoted CPMG-4 closed form against the general filter sum over the CPMG-4
    fractions, with the textbook CPMG-n form alongside. Disagreement is
    reported, not corrected.
    """
    grid = audit_grid(samples, kl_step)
    quoted = filter_cpmg4_closed(grid)
    general = filter_general(CPMG4_FRACTIONS, grid)
    textbook = filter_cpmg_closed(grid, 4)
    rows = []
    for z, q, g, t in zip(grid, np.atleast_1d(quoted), np.atleast_1d(general), np.atleast_1d(textbook)):
        rows.append({
            "kl": float(z),
            "quoted_closed": float(q),
            "general": float(g),
            "textbook_closed": float(t),
            "abs_diff": float(abs(q - g)),
            "quoted_singular": bool(abs(math.cos(z / 4.0)) < 1e-9),
        })
    return rows
