"""
Synthetic lateral-force scans and their analysis: scan averaging, sine fitting,
separation inversion, power-law slope and confidence intervals.
"""

import hashlib
import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.stats import linregress

from exceptions import (
    DomainError,
    GeometryError,
    InsufficientDataError,
    NoSolutionError,
    UnderdeterminedFitError,
)
from lateral_force import lateral_amplitude, lateral_force_array
from logging_config import get_pipeline_logger, log_performance
from schemas import (
    AnalysisConfig,
    ConfidenceInterval,
    CorrugationProfile,
    Material,
    PowerLawFit,
    ScanAnalysis,
    ScanConfig,
    ScanSet,
    SineFit,
    SphereGeometry,
)

logger = get_pipeline_logger()

INVERSION_FLOOR = 1.0e-9
INVERSION_CEILING = 2.0e-6
INVERSION_GRID = 64
INVERSION_XTOL = 1.0e-12


def derive_seed(seed: int, label: str) -> int:
    """Sub-seed for one labelled consumer of the run seed"""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@log_performance("pipeline")
def simulate_scan(config: ScanConfig, profile: CorrugationProfile, z: float,
                  sphere: SphereGeometry, material: Material,
                  coefficients: Optional[Sequence[float]] = None) -> ScanSet:
    """
    Repeated lateral scans of the plate under the sphere.

    Each step moves the plate by config.step; the phase follows as 2πx/Λ. A tilted
    plate drifts the separation by tilt_slope·x unless the z correction restores it.
    Gaussian noise is drawn from a generator seeded by config.rng_seed.
    """
    if z <= profile.contact_separation:
        raise GeometryError(
            f"Separation {z:.6g} m does not exceed A1 + A2 = {profile.contact_separation:.6g} m")

    n_steps = config.resolved_steps(profile.period)
    displacements = config.step * np.arange(n_steps)
    phases = 2.0 * math.pi * displacements / profile.period
    if config.z_correction_enabled or config.tilt_slope == 0.0:
        gaps = np.full(n_steps, z)
    else:
        gaps = z + config.tilt_slope * displacements

    try:
        curve, _, _, _ = lateral_force_array(profile, gaps, phases, sphere, material, coefficients)
    except GeometryError as e:
        raise GeometryError(
            f"Tilt drift brings the surfaces into contact at scan step {e.step} "
            f"(x={displacements[e.step]:.6g} m)",
            step=e.step,
        ) from e

    rng = np.random.default_rng(config.rng_seed)
    forces = np.tile(curve, (config.n_scans, 1))
    if config.noise_sigma > 0:
        forces = forces + rng.normal(0.0, config.noise_sigma, size=forces.shape)

    logger.debug(f"Simulated {config.n_scans} scans of {n_steps} steps at z={z:.6g} m")
    return ScanSet.from_forces(displacements, forces)


def fit_sine(displacements: Sequence[float], values: Sequence[float], period: float) -> SineFit:
    """
    Least-squares fit of a·sin(2πx/Λ) + b·cos(2πx/Λ) + c at known period.

    amplitude = √(a²+b²) and the fitted curve is amplitude·sin(2πx/Λ + phase) + offset.
    """
    x = np.asarray(displacements, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 3 or x.shape != y.shape:
        raise UnderdeterminedFitError(f"Sine fit needs at least 3 paired samples, got {x.size}")
    if np.ptp(x) < period / 2.0:
        logger.warning(f"Sine fit samples span {np.ptp(x):.4g} m, less than half a period")

    theta = 2.0 * math.pi * x / period
    design = np.column_stack([np.sin(theta), np.cos(theta), np.ones_like(theta)])
    if np.linalg.matrix_rank(design) < 3:
        raise UnderdeterminedFitError("Sample positions are congruent modulo half a period")
    (a, b, c), _, _, _ = np.linalg.lstsq(design, y, rcond=None)

    residuals = y - design @ np.array([a, b, c])
    return SineFit(
        amplitude=float(math.hypot(a, b)),
        phase=float(math.atan2(b, a)),
        offset=float(c),
        rms_residual=float(np.sqrt(np.mean(residuals ** 2))),
    )


def invert_separation(measured_amplitude: float, profile: CorrugationProfile,
                      sphere: SphereGeometry, material: Material,
                      coefficients: Optional[Sequence[float]] = None,
                      z_max: float = INVERSION_CEILING) -> float:
    """
    Separation whose lateral-force amplitude equals the measured one.

    Walks a geometric grid down from z_max to the first separation whose amplitude
    reaches the target, then bisects inside that cell to INVERSION_XTOL.
    """
    if not measured_amplitude > 0:
        raise DomainError(f"Amplitude must be positive, got {measured_amplitude}")

    z_min = profile.contact_separation + INVERSION_FLOOR
    grid = np.geomspace(z_min, z_max, INVERSION_GRID)

    def residual(z: float) -> float:
        return lateral_amplitude(profile, z, sphere, material, coefficients)[0] - measured_amplitude

    upper = grid[-1]
    upper_value = residual(upper)
    if upper_value > 0:
        raise NoSolutionError(
            f"Amplitude {measured_amplitude:.4g} N is below the attainable range (z <= {z_max:.4g} m)")
    if upper_value == 0:
        return float(upper)

    for lower in grid[-2::-1]:
        lower_value = residual(lower)
        if lower_value >= 0:
            if lower_value == 0:
                return float(lower)
            return float(bisect(residual, lower, upper, xtol=INVERSION_XTOL))
        upper = lower

    raise NoSolutionError(
        f"Amplitude {measured_amplitude:.4g} N exceeds the attainable range (z >= {z_min:.4g} m)")


def fit_power_law(separations: Sequence[float], amplitudes: Sequence[float]) -> PowerLawFit:
    """
    Straight-line fit of ln(amplitude) against ln(z).

    slope is the decay exponent, the negated regression slope.
    """
    z = np.asarray(separations, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if z.shape != a.shape:
        raise DomainError("Separations and amplitudes must have the same length")
    if np.any(z <= 0) or np.any(a <= 0):
        raise DomainError("Power-law fit needs positive separations and amplitudes")
    if z.size < 2 or np.unique(z).size < 2:
        raise UnderdeterminedFitError(f"Power-law fit needs at least 2 distinct separations, got {np.unique(z).size}")

    result = linregress(np.log(z), np.log(a))
    return PowerLawFit(slope=-float(result.slope), intercept=float(result.intercept),
                       slope_stderr=float(result.stderr), n_points=int(z.size))


def combine_uncertainty(mean_amplitude: float, sigma_mean: float, systematic_fraction: float,
                        student_t: float, n_samples: int,
                        confidence_level: float = 0.95) -> ConfidenceInterval:
    """Δ_A = t·σ_Ā + systematic_fraction·Ā; random and systematic parts add linearly"""
    if systematic_fraction < 0:
        raise DomainError("Systematic fraction must be >= 0")
    systematic = systematic_fraction * abs(mean_amplitude)
    return ConfidenceInterval(
        mean_amplitude=mean_amplitude,
        sigma_mean=sigma_mean,
        systematic=systematic,
        student_t=student_t,
        delta_total=student_t * sigma_mean + systematic,
        confidence_level=confidence_level,
        n_samples=n_samples,
    )


def confidence_interval(per_scan_amplitudes: Sequence[float], systematic_fraction: float,
                        student_t: float, confidence_level: float = 0.95) -> ConfidenceInterval:
    """Confidence interval of the mean amplitude from an ensemble of per-scan amplitudes"""
    amplitudes = np.asarray(per_scan_amplitudes, dtype=float)
    if amplitudes.size < 2:
        raise InsufficientDataError(f"Confidence interval needs at least 2 amplitudes, got {amplitudes.size}")
    sigma_mean = float(np.std(amplitudes, ddof=1) / math.sqrt(amplitudes.size))
    return combine_uncertainty(
        float(amplitudes.mean()), sigma_mean, systematic_fraction, student_t,
        int(amplitudes.size), confidence_level,
    )


def analyze_scan(scan: ScanSet, profile: CorrugationProfile, sphere: SphereGeometry,
                 material: Material, analysis: AnalysisConfig = AnalysisConfig(),
                 coefficients: Optional[Sequence[float]] = None) -> ScanAnalysis:
    """
    Fit the averaged scan, fit every scan row for the amplitude dispersion, and
    convert the mean amplitude back into a separation.
    """
    mean_fit = fit_sine(scan.displacements, scan.mean_force, profile.period)
    per_scan = [fit_sine(scan.displacements, row, profile.period).amplitude for row in scan.forces]

    confidence = None
    if len(per_scan) >= 2:
        confidence = confidence_interval(
            per_scan, analysis.systematic_fraction, analysis.student_t, analysis.confidence_level)

    inverted = None
    if mean_fit.amplitude > 0:
        try:
            inverted = invert_separation(mean_fit.amplitude, profile, sphere, material, coefficients)
        except NoSolutionError as e:
            logger.warning(f"Could not invert fitted amplitude: {e}")

    return ScanAnalysis(
        mean_fit=mean_fit,
        per_scan_amplitudes=per_scan,
        confidence=confidence,
        inverted_separation=inverted,
    )
