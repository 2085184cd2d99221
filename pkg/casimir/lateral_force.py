"""
Casimir interaction between a corrugated plate and a corrugated sphere.

Energies come from additive summation of the plate energy over the local gap,
forces from the proximity force theorem. The lateral force has a closed form;
lateral_force_numeric recomputes it from the defining energy integral by
quadrature and numerical differentiation and serves as its oracle.
"""

import math
from typing import Callable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from energy import conductivity_coefficients, energy_power_terms, energy_validity, plate_energy
from exceptions import DomainError, GeometryError, NumericalError
from geometry import effective_amplitude, effective_params, reduce_phases
from logging_config import get_force_logger, log_performance
from schemas import (
    DEFAULT_CONSTANTS,
    CorrugationPair,
    CorrugationProfile,
    LateralForceResult,
    Material,
    PhysicalConstants,
    SphereGeometry,
    ValidityFlag,
)

logger = get_force_logger()

ArrayLike = Union[float, np.ndarray]

QUADRATURE_NODES = 2048
QUADRATURE_RTOL = 1e-9
QUADRATURE_MAX_NODES = 2 ** 20
PHASE_STEP = 1e-3
PHASE_TOLERANCE = 1e-7
PHASE_GRID = 129
PFT_MARGIN = 10.0


def periodic_mean(integrand: Callable[[np.ndarray], np.ndarray],
                  nodes: int = QUADRATURE_NODES,
                  rtol: float = QUADRATURE_RTOL,
                  max_nodes: int = QUADRATURE_MAX_NODES) -> float:
    """
    Mean of a 2π-periodic function by the trapezoidal rule on equispaced nodes.

    The node count is doubled, reusing earlier samples, until two successive
    estimates agree to rtol.
    """
    theta = 2.0 * math.pi * np.arange(nodes) / nodes
    total = float(np.sum(integrand(theta)))
    estimate = total / nodes
    history = [estimate]
    while nodes < max_nodes:
        midpoints = 2.0 * math.pi * (np.arange(nodes) + 0.5) / nodes
        total += float(np.sum(integrand(midpoints)))
        nodes *= 2
        refined = total / nodes
        history.append(refined)
        if abs(refined - estimate) <= rtol * abs(refined):
            return refined
        estimate = refined
    raise NumericalError(
        "Periodic quadrature did not converge",
        diagnostics={"nodes": nodes, "rtol": rtol, "estimates": history[-4:]},
    )


def validity_flags(z: float, period: float, sphere: SphereGeometry, material: Material) -> Set[ValidityFlag]:
    flags = set(energy_validity(z, material))
    if sphere.radius < PFT_MARGIN * max(z, period):
        flags.add(ValidityFlag.PFT_MARGINAL)
    if period <= z:
        flags.add(ValidityFlag.ADDITIVE_MARGINAL)
    return flags


def corrugated_energy(pair: CorrugationPair, material: Material,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """
    Plate energy averaged over one corrugation period of the local gap, in J/m².
    """
    eff = effective_params(pair)
    z = pair.mean_separation

    def integrand(theta):
        return plate_energy(z + eff.b * np.cos(theta - eff.alpha), material, constants)

    return periodic_mean(integrand)


def normal_force_pft(pair: CorrugationPair, sphere: SphereGeometry, material: Material,
                     constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Normal sphere–plate force 2πR·E_cor; negative means attraction"""
    return 2.0 * math.pi * sphere.radius * corrugated_energy(pair, material, constants)


def _gap_energy_integral(z: float, b: float, material: Material,
                         constants: PhysicalConstants) -> float:
    """
    ∫_z^∞ E_cor(y) dy per unit area, integrating each power of the gap exactly in y.
    """
    if b >= z:
        raise GeometryError(f"Effective amplitude b={b:.6g} m reaches the separation z={z:.6g} m")
    total = 0.0
    for k, p in energy_power_terms(material, constants):
        q = p - 1
        total += k / q * periodic_mean(lambda theta: (z + b * np.cos(theta)) ** (-q))
    return total


def sphere_plate_energy(pair: CorrugationPair, sphere: SphereGeometry, material: Material,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """
    Interaction energy of the corrugated sphere and plate, 2πR ∫_z^∞ E_cor(y) dy, in J.
    """
    eff = effective_params(pair)
    return 2.0 * math.pi * sphere.radius * _gap_energy_integral(
        pair.mean_separation, eff.b, material, constants)


def lateral_coefficients(beta: float,
                         coefficients: Optional[Sequence[float]] = None) -> Tuple[float, float, float, float]:
    """
    Coefficients c₁ₓ..c₄ₓ of the conductivity bracket of the lateral force at β = b/z.
    """
    if not (0.0 <= beta < 1.0):
        raise DomainError(f"beta must satisfy 0 <= beta < 1, got {beta}")
    return tuple(float(c) for c in _lateral_coefficients(beta * beta, coefficients))


def _lateral_coefficients(beta2: ArrayLike, coefficients: Optional[Sequence[float]]) -> List[ArrayLike]:
    c1, c2, c3, c4 = coefficients if coefficients is not None else conductivity_coefficients()
    u = beta2
    w = 1.0 - u
    return [
        (4.0 + u) / (3.0 * w) * c1,
        5.0 * (4.0 + 3.0 * u) / (12.0 * w ** 2) * c2,
        (8.0 + 12.0 * u + u ** 2) / (4.0 * w ** 3) * c3,
        7.0 * (8.0 + 20.0 * u + 5.0 * u ** 2) / (24.0 * w ** 4) * c4,
    ]


def lateral_force_array(profile: CorrugationProfile, z: ArrayLike, phases: ArrayLike,
                        sphere: SphereGeometry, material: Material,
                        coefficients: Optional[Sequence[float]] = None,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """
    Closed-form lateral force on broadcast arrays of separation and phase.

    Returns (force, ideal_force, bracket_factor, beta) arrays. Raises GeometryError
    naming the first index where the surfaces would touch.
    """
    z, phases = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(phases, dtype=float))
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(phases))):
        raise DomainError("Separations and phases must be finite")
    phases = reduce_phases(phases)
    b, _ = effective_amplitude(profile.amplitude_plate, profile.amplitude_sphere, phases)
    b = np.asarray(b, dtype=float)
    # b >= 0, so this also catches z <= 0
    touching = np.flatnonzero(b >= z)
    if touching.size:
        index = int(touching[0])
        raise GeometryError(
            f"Surfaces touch at index {index}: b={b.flat[index]:.6g} m >= z={z.flat[index]:.6g} m",
            step=index,
        )

    beta2 = (b / z) ** 2
    ideal = (
        math.pi ** 4 * sphere.radius * constants.hbar_c / (120.0 * z ** 4)
        * profile.amplitude_plate * profile.amplitude_sphere * np.sin(phases)
        / (profile.period * (1.0 - beta2) ** 2.5)
    )
    bracket = np.ones_like(z)
    if material.plasma_wavelength > 0:
        ratio = material.plasma_wavelength / (2.0 * math.pi * z)
        for n, cx in enumerate(_lateral_coefficients(beta2, coefficients), start=1):
            bracket = bracket + cx * ratio ** n
    return ideal * bracket, ideal, bracket, np.sqrt(beta2)


def lateral_force_closed(pair: CorrugationPair, sphere: SphereGeometry, material: Material,
                         coefficients: Optional[Sequence[float]] = None,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS) -> LateralForceResult:
    """
    Closed-form lateral Casimir force at the pair's separation and phase.

    Odd in φ and zero at φ ∈ {0, π}. The bracket factor is not clamped; it can
    turn negative well below λ_p, where the result is flagged anyway.
    """
    force, ideal, bracket, beta = lateral_force_array(
        pair.profile, pair.mean_separation, pair.phase, sphere, material, coefficients, constants)
    return LateralForceResult(
        force=float(force),
        ideal_force=float(ideal),
        bracket_factor=float(bracket),
        beta=float(beta),
        phase=pair.phase,
        separation=pair.mean_separation,
        validity_flags=validity_flags(pair.mean_separation, pair.period, sphere, material),
    )


def lateral_phase_curve(profile: CorrugationProfile, z: float, phases: ArrayLike,
                        sphere: SphereGeometry, material: Material,
                        coefficients: Optional[Sequence[float]] = None,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """Closed-form lateral force over an array of phases at fixed separation"""
    force, _, _, _ = lateral_force_array(profile, z, phases, sphere, material, coefficients, constants)
    return np.asarray(force)


@log_performance("force")
def lateral_force_numeric(pair: CorrugationPair, sphere: SphereGeometry, material: Material,
                          constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """
    Lateral force from the defining integral, −(4π²R/Λ)·∂/∂φ ∫_z^∞ E_cor(y) dy.

    The y-integral is exact per power term, the x-integral is a periodic trapezoid,
    the φ-derivative a central difference with one Richardson level. Shares no
    algebra with the closed form.
    """
    z = pair.mean_separation

    def energy_at(phase: float) -> float:
        b, _ = effective_amplitude(pair.amplitude_plate, pair.amplitude_sphere, phase)
        return _gap_energy_integral(z, float(b), material, constants)

    def central(h: float) -> float:
        return (energy_at(pair.phase + h) - energy_at(pair.phase - h)) / (2.0 * h)

    derivative = (4.0 * central(PHASE_STEP / 2.0) - central(PHASE_STEP)) / 3.0
    return -4.0 * math.pi ** 2 * sphere.radius / pair.period * derivative


def lateral_amplitude(profile: CorrugationProfile, z: float, sphere: SphereGeometry,
                      material: Material,
                      coefficients: Optional[Sequence[float]] = None,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> Tuple[float, float]:
    """
    Largest |lateral force| over φ ∈ (0, π) and the phase where it occurs.

    A coarse phase grid locates the maximum, golden-section search refines it.
    """
    if z <= profile.contact_separation:
        raise GeometryError(
            f"Separation {z:.6g} m does not exceed A1 + A2 = {profile.contact_separation:.6g} m")

    def objective(phase: float) -> float:
        return -abs(float(lateral_phase_curve(profile, z, phase, sphere, material, coefficients, constants)))

    grid = np.linspace(0.0, math.pi, PHASE_GRID)
    magnitudes = np.abs(lateral_phase_curve(profile, z, grid, sphere, material, coefficients, constants))
    i = int(np.argmax(magnitudes[1:-1])) + 1
    if magnitudes[i] == 0.0:
        return 0.0, math.pi / 2.0

    bracket = (grid[i - 1], grid[i], grid[i + 1])
    if not (-magnitudes[i] < -magnitudes[i - 1] and -magnitudes[i] < -magnitudes[i + 1]):
        logger.debug(f"Flat phase maximum at z={z:.6g} m, keeping grid value")
        return float(magnitudes[i]), float(grid[i])

    result = minimize_scalar(objective, bracket=bracket, method="golden",
                             options={"xtol": PHASE_TOLERANCE})
    return float(-result.fun), float(result.x)
