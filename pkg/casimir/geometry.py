"""
Sinusoidal corrugation profiles and their reduction to a single effective cosine.

The local gap between the surfaces is z₂ − z₁ = z + b·cos(2πx/Λ − α) with
b·cos α = A₂ sin φ and b·sin α = A₂ cos φ − A₁.
"""

import math
from typing import Tuple, Union

import numpy as np

from exceptions import GeometryError
from logging_config import get_geometry_logger
from schemas import TWO_PI, CorrugationPair, EffectiveCorrugation

logger = get_geometry_logger()

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(value) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def profile_lower(x: ArrayLike, pair: CorrugationPair) -> ArrayLike:
    """Height of the plate surface, A₁ sin(2πx/Λ)"""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(pair.amplitude_plate * np.sin(2.0 * math.pi * x / pair.period))


def profile_upper(x: ArrayLike, pair: CorrugationPair) -> ArrayLike:
    """Height of the sphere surface, z + A₂ sin(2πx/Λ + φ)"""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(
        pair.mean_separation
        + pair.amplitude_sphere * np.sin(2.0 * math.pi * x / pair.period + pair.phase)
    )


def reduce_phases(phases: ArrayLike) -> np.ndarray:
    """Phases reduced to [0, 2π) with the same rule as CorrugationPair.phase"""
    reduced = np.fmod(np.asarray(phases, dtype=float), TWO_PI)
    reduced = np.where(reduced < 0.0, reduced + TWO_PI, reduced)
    return np.where(reduced >= TWO_PI, 0.0, reduced)


def effective_amplitude(amplitude_plate: float, amplitude_sphere: float,
                        phase: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Amplitude b(φ) and phase α(φ) of the gap modulation, vectorised over φ.

    Uses the two-argument arctangent so α is quadrant-correct and defined at φ ∈ {0, π}.
    α is 0 where b vanishes.
    """
    phase = np.asarray(phase, dtype=float)
    cos_part = amplitude_sphere * np.sin(phase)
    sin_part = amplitude_sphere * np.cos(phase) - amplitude_plate
    b = np.hypot(cos_part, sin_part)
    alpha = np.where(b > 0.0, np.arctan2(sin_part, cos_part), 0.0)
    return _scalar_or_array(b), _scalar_or_array(alpha)


def effective_params(pair: CorrugationPair) -> EffectiveCorrugation:
    """Reduce the pair to EffectiveCorrugation(b, α, β = b/z)"""
    b, alpha = effective_amplitude(pair.amplitude_plate, pair.amplitude_sphere, pair.phase)
    z = pair.mean_separation
    if b >= z:
        raise GeometryError(f"Effective amplitude b={b:.6g} m reaches the separation z={z:.6g} m")
    return EffectiveCorrugation(b=b, alpha=alpha, beta=b / z)


def separation(x: ArrayLike, pair: CorrugationPair) -> ArrayLike:
    """Local gap z + b·cos(2πx/Λ − α) between the two surfaces; strictly positive"""
    eff = effective_params(pair)
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(
        pair.mean_separation + eff.b * np.cos(2.0 * math.pi * x / pair.period - eff.alpha)
    )
