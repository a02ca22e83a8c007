"""Uniform linear arrays, beam gains, and deactivation beam synthesis.

Directions are carried in sine space (directional cosine): half-wavelength
ULA beams have uniform width there.  Degrees appear only at the API edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UNIT_NORM_TOL",
    "UniformLinearArray",
    "AngleInterval",
    "Beamformer",
    "steering_vector",
    "steering_from_sine",
    "beam_gain",
    "beam_gain_from_sine",
    "synthesize_deactivation",
    "ideal_gain",
]

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class UniformLinearArray:
    num_elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise ValueError(f"num_elements must be a positive integer, got {self.num_elements}")
        if not self.spacing_wavelengths > 0.0:
            raise ValueError(f"spacing_wavelengths must be positive, got {self.spacing_wavelengths}")


@dataclass(frozen=True)
class AngleInterval:
    """Half-open sine-space interval [lo, hi); both ends in [-1, 1]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (-1.0 <= self.lo < self.hi <= 1.0):
            raise ValueError(f"need -1 <= lo < hi <= 1, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, sine: float) -> bool:
        return self.lo <= sine < self.hi


@dataclass(frozen=True)
class Beamformer:
    """Unit-norm beamforming weights, or an ideal flat-gain pattern, with coverage.

    Exactly one of ``weights`` and ``flat_gain`` is set.  Weight vectors must
    be unit norm with every entry either zero or of one common modulus
    (single-RF-chain constraint with antenna deactivation).
    """

    weights: np.ndarray | None
    coverage: AngleInterval
    level: int = 0
    index: int = 0
    flat_gain: float | None = None

    def __post_init__(self):
        if (self.weights is None) == (self.flat_gain is None):
            raise ValueError("exactly one of weights and flat_gain must be set")
        if self.flat_gain is not None:
            if not self.flat_gain > 0.0:
                raise ValueError(f"flat_gain must be positive, got {self.flat_gain}")
            return
        w = np.asarray(self.weights, dtype=complex)
        object.__setattr__(self, "weights", w)
        norm_sq = float(np.sum(np.abs(w) ** 2))
        if abs(norm_sq - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"weights must be unit norm, got ||w||^2 = {norm_sq}")
        mods = np.abs(w)
        active = mods > UNIT_NORM_TOL
        if not active.any():
            raise ValueError("all weights are zero")
        if np.ptp(mods[active]) > UNIT_NORM_TOL:
            raise ValueError("active weights must share a single common modulus")

    @property
    def num_active(self) -> int:
        if self.weights is None:
            return 0
        return int(np.count_nonzero(np.abs(self.weights) > UNIT_NORM_TOL))


def steering_from_sine(array: UniformLinearArray, sine: float) -> np.ndarray:
    """Unnormalized steering vector at directional cosine ``sine`` (norm^2 = N)."""
    m = np.arange(array.num_elements)
    return np.exp(1j * (2.0 * np.pi * array.spacing_wavelengths * sine) * m)


def steering_vector(array: UniformLinearArray, angle_deg: float) -> np.ndarray:
    return steering_from_sine(array, math.sin(math.radians(angle_deg)))


def beam_gain_from_sine(beam: Beamformer, array: UniformLinearArray, sine: float) -> float:
    if beam.weights is None:
        return beam.flat_gain if beam.coverage.contains(sine) else 0.0
    v = steering_from_sine(array, sine)
    return float(abs(np.vdot(beam.weights, v)) ** 2)


def beam_gain(beam: Beamformer, array: UniformLinearArray, angle_deg: float) -> float:
    """Array response power |v(angle) w^H|^2 of the beam toward ``angle_deg``."""
    return beam_gain_from_sine(beam, array, math.sin(math.radians(angle_deg)))


def synthesize_deactivation(array: UniformLinearArray, coverage: AngleInterval,
                            level: int = 0, index: int = 0) -> Beamformer:
    """Widen a beam by activating only a centered subarray steered at the interval midpoint.

    The number of active elements is round(2 / width): a contiguous block of
    N_a half-wavelength elements has sine-space beamwidth 2 / N_a.  Active
    weights share modulus 1/sqrt(N_a); the rest are zero.
    """
    width = coverage.width
    required = 2.0 / width
    n = array.num_elements
    if required > n:
        raise ValueError(
            f"coverage width {width} needs {required:.2f} active elements, "
            f"but the array has only {n}"
        )
    n_active = min(max(int(math.floor(required + 0.5)), 1), n)
    start = (n - n_active) // 2
    m = np.arange(start, start + n_active)
    w = np.zeros(n, dtype=complex)
    w[start:start + n_active] = np.exp(
        1j * (2.0 * np.pi * array.spacing_wavelengths * coverage.mid) * m
    ) / math.sqrt(n_active)
    return Beamformer(weights=w, coverage=coverage, level=level, index=index)


def ideal_gain(level_sizes: tuple[int, int], top_sizes: tuple[int, int],
               num_elements: tuple[int, int],
               aod_in_coverage: bool, aoa_in_coverage: bool) -> float:
    """Combined flat gain of an ideal beam pair, zero outside coverage.

    Per-side gain is proportional to the codebook size (inverse beamwidth),
    calibrated so the finest level reaches the full coherent array gain:
    W = N_T * L_T / L_T_top and F = N_R * L_R / L_R_top.
    """
    l_t, l_r = level_sizes
    l_t_top, l_r_top = top_sizes
    if l_t > l_t_top or l_r > l_r_top:
        raise ValueError("level sizes cannot exceed top-level sizes")
    if not (aod_in_coverage and aoa_in_coverage):
        return 0.0
    n_t, n_r = num_elements
    return (n_t * l_t / l_t_top) * (n_r * l_r / l_r_top)
