"""
Parallel-plate Casimir energy and pressure, for an ideal metal and with
finite-conductivity corrections in powers of λ_p/(2πz).
"""

import math
from typing import List, Set, Tuple, Union

import numpy as np

from constants import C1, C2, C3, C4
from exceptions import DomainError
from logging_config import get_energy_logger
from schemas import DEFAULT_CONSTANTS, Material, PhysicalConstants, ValidityFlag

logger = get_energy_logger()

ArrayLike = Union[float, np.ndarray]


def _as_separation(z: ArrayLike) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z <= 0.0):
        raise DomainError(f"Separation must be finite and > 0, got {z}")
    return z


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def energy_prefactor(constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """π²ħc/720, the magnitude of the ideal energy at unit separation"""
    return math.pi ** 2 * constants.hbar_c / 720.0


def ideal_plate_energy(z: ArrayLike, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> ArrayLike:
    """
    Casimir energy per unit area between ideal metal plates, -π²ħc/(720 z³), in J/m².
    """
    z = _as_separation(z)
    return _scalar_or_array(-energy_prefactor(constants) / z ** 3)


def ideal_plate_pressure(z: ArrayLike, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> ArrayLike:
    """
    Casimir pressure between ideal metal plates, -π²ħc/(240 z⁴), in Pa. Attraction is negative.
    """
    z = _as_separation(z)
    return _scalar_or_array(-math.pi ** 2 * constants.hbar_c / (240.0 * z ** 4))


def conductivity_coefficients() -> Tuple[float, float, float, float]:
    """Coefficients c₁..c₄ of the finite-conductivity expansion"""
    return (C1, C2, C3, C4)


def conductivity_ratio(z: ArrayLike, material: Material) -> ArrayLike:
    """λ_p/(2πz), the expansion parameter of the conductivity corrections"""
    z = _as_separation(z)
    return _scalar_or_array(material.plasma_wavelength / (2.0 * math.pi * z))


def conductivity_bracket(z: ArrayLike, material: Material) -> ArrayLike:
    """1 + Σ cₙ(λ_p/2πz)ⁿ; exactly 1.0 for an ideal metal"""
    x = np.asarray(conductivity_ratio(z, material))
    bracket = np.ones_like(x)
    for n, c in enumerate(conductivity_coefficients(), start=1):
        bracket = bracket + c * x ** n
    return _scalar_or_array(bracket)


def energy_validity(z: float, material: Material) -> Set[ValidityFlag]:
    """Flags separations below λ_p, where the expansion is outside its stated accuracy"""
    if material.plasma_wavelength > 0 and float(z) < material.plasma_wavelength:
        return {ValidityFlag.BELOW_PLASMA_WAVELENGTH}
    return set()


def plate_energy(z: ArrayLike, material: Material,
                 constants: PhysicalConstants = DEFAULT_CONSTANTS) -> ArrayLike:
    """
    Parallel-plate energy per unit area with conductivity corrections up to fourth order.

    Separations below λ_p are computed anyway; use energy_validity to flag them.
    """
    z = _as_separation(z)
    if material.plasma_wavelength > 0 and np.any(z < material.plasma_wavelength):
        logger.debug(f"Plate energy requested below λ_p={material.plasma_wavelength:.4g} m")
    energy = np.asarray(ideal_plate_energy(z, constants)) * np.asarray(conductivity_bracket(z, material))
    return _scalar_or_array(energy)


def energy_power_terms(material: Material,
                       constants: PhysicalConstants = DEFAULT_CONSTANTS) -> List[Tuple[float, int]]:
    """
    Plate energy as a sum of pure powers: E_pp(s) = Σ kₙ s^(−pₙ).

    Returns the (kₙ, pₙ) pairs, one per nonzero correction order. Exact integration of the
    energy over separation relies on this form.
    """
    scale = material.plasma_wavelength / (2.0 * math.pi)
    prefactor = -energy_prefactor(constants)
    terms = [(prefactor, 3)]
    if scale == 0.0:
        return terms
    for n, c in enumerate(conductivity_coefficients(), start=1):
        terms.append((prefactor * c * scale ** n, 3 + n))
    return terms


def plate_pressure(z: ArrayLike, material: Material,
                   constants: PhysicalConstants = DEFAULT_CONSTANTS) -> ArrayLike:
    """Pressure -dE_pp/dz of the corrected plate energy, term by term"""
    z = _as_separation(z)
    pressure = np.zeros_like(z)
    for k, p in energy_power_terms(material, constants):
        pressure = pressure + k * p * z ** (-(p + 1))
    return _scalar_or_array(pressure)
