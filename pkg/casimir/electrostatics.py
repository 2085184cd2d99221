"""
Electrostatic sphere–plate force and the voltage-sweep calibration of the
cantilever spring constant and the residual potential.
"""

import math
from typing import List, Optional, Sequence

import numpy as np

from exceptions import InconsistentDataError, UnderdeterminedFitError
from geometry import effective_params
from logging_config import get_calibration_logger
from schemas import (
    DEFAULT_CONSTANTS,
    CalibrationResult,
    CalibrationSample,
    CorrugationPair,
    PhysicalConstants,
    SphereGeometry,
)

logger = get_calibration_logger()

DEFAULT_SWEEP_SPAN = 0.5
DEFAULT_SWEEP_POINTS = 11
ISOLATION_RATIO = 10.0


def electrostatic_gain(pair: CorrugationPair, sphere: SphereGeometry,
                       constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """πRε₀/(z√(1−β²)), the magnitude of the force per squared volt"""
    beta = effective_params(pair).beta
    return math.pi * sphere.radius * constants.epsilon0 / (pair.mean_separation * math.sqrt(1.0 - beta ** 2))


def electrostatic_force(pair: CorrugationPair, applied_voltage: float, residual_potential: float,
                        sphere: SphereGeometry,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """
    Normal electrostatic force −πRε₀(V₁−V₀)²/z · 1/√(1−β²) between the corrugated bodies.

    Smooth surfaces are the A₁ = A₂ = 0 case.
    """
    return -electrostatic_gain(pair, sphere, constants) * (applied_voltage - residual_potential) ** 2


def default_sweep_voltages(span: float = DEFAULT_SWEEP_SPAN, points: int = DEFAULT_SWEEP_POINTS) -> np.ndarray:
    return np.linspace(-span, span, points)


def simulate_sweep(voltages: Sequence[float], spring_constant: float, residual_potential: float,
                   pair: CorrugationPair, sphere: SphereGeometry,
                   noise_sigma: float = 0.0, seed: Optional[int] = None,
                   constants: PhysicalConstants = DEFAULT_CONSTANTS) -> List[CalibrationSample]:
    """Deflections force/k for each applied voltage, with optional Gaussian noise"""
    rng = np.random.default_rng(seed)
    samples = []
    for v in voltages:
        deflection = electrostatic_force(pair, float(v), residual_potential, sphere, constants) / spring_constant
        if noise_sigma > 0:
            deflection += rng.normal(0.0, noise_sigma)
        samples.append(CalibrationSample(applied_voltage=float(v), deflection_signal=deflection))
    return samples


def calibrate_from_sweep(samples: Sequence[CalibrationSample], pair: CorrugationPair,
                         sphere: SphereGeometry,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS) -> CalibrationResult:
    """
    Recover the spring constant and residual potential from a voltage sweep.

    The deflection is a parabola in V₁; fitting −deflection = a·V₁² + b·V₁ + c gives
    V₀ = −b/(2a) and k = G/a with G the electrostatic gain. An attractive force
    requires a > 0.
    """
    voltages = np.array([s.applied_voltage for s in samples], dtype=float)
    deflections = np.array([s.deflection_signal for s in samples], dtype=float)

    if len(samples) < 3 or np.unique(voltages).size < 3:
        raise UnderdeterminedFitError(
            f"Calibration needs at least 3 distinct voltages, got {np.unique(voltages).size}")

    design = np.column_stack([voltages ** 2, voltages, np.ones_like(voltages)])
    (a, b, c), _, rank, _ = np.linalg.lstsq(design, -deflections, rcond=None)
    if rank < 3:
        raise UnderdeterminedFitError("Calibration design matrix is rank deficient")
    if a <= 0:
        raise InconsistentDataError(
            f"Sweep curvature {a:.6g} is not attractive; check the deflection sign")

    residual_potential = -b / (2.0 * a)
    spring_constant = electrostatic_gain(pair, sphere, constants) / a
    residuals = design @ np.array([a, b, c]) + deflections
    fit_residual = float(np.sqrt(np.mean(residuals ** 2)))

    logger.info(
        f"Calibrated k={spring_constant:.6g} N/m, V0={residual_potential:.6g} V from {len(samples)} samples"
    )
    return CalibrationResult(
        spring_constant=float(spring_constant),
        residual_potential=float(residual_potential),
        fit_residual=fit_residual,
        n_samples=len(samples),
    )


def spring_constant_ratio(torsional: float, bending: float) -> float:
    """k_tor/k_ben; a large ratio isolates the lateral force from the normal one"""
    if torsional <= 0 or bending <= 0:
        raise InconsistentDataError("Spring constants must be positive")
    return torsional / bending


def lateral_isolation_ok(torsional: float, bending: float) -> bool:
    return spring_constant_ratio(torsional, bending) >= ISOLATION_RATIO
