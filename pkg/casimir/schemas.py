import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from constants import (
    DEFAULT_AMPLITUDE_PLATE,
    DEFAULT_AMPLITUDE_SPHERE,
    DEFAULT_CLOSEST_SEPARATION,
    DEFAULT_PERIOD,
    DEFAULT_PLASMA_WAVELENGTH,
    DEFAULT_SCAN_COUNT,
    DEFAULT_SCAN_STEP,
    DEFAULT_SEPARATION_COUNT,
    DEFAULT_SEPARATION_STEP,
    DEFAULT_SPHERE_RADIUS,
    DEFAULT_STUDENT_T,
    DEFAULT_SYSTEMATIC_FRACTION,
    EPSILON0,
    HBAR_C,
    PFT_ACCURACY,
    PLATE_ENERGY_ACCURACY,
    RESIDUAL_POTENTIAL,
    TORSIONAL_SPRING_CONSTANT,
)
from exceptions import DomainError

TWO_PI = 2.0 * math.pi


# Base schemas
class Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class ValidityFlag(str, Enum):
    BELOW_PLASMA_WAVELENGTH = "below_plasma_wavelength"
    PFT_MARGINAL = "pft_marginal"
    ADDITIVE_MARGINAL = "additive_marginal"


# Physical inputs
class PhysicalConstants(Frozen):
    hbar_c: float = Field(HBAR_C, gt=0, description="Planck constant times speed of light, J·m")
    epsilon0: float = Field(EPSILON0, gt=0, description="Vacuum permittivity, F/m")


DEFAULT_CONSTANTS = PhysicalConstants()


class Material(Frozen):
    plasma_wavelength: float = Field(0.0, ge=0, description="Plasma wavelength in m; 0 is an ideal metal")

    @property
    def is_ideal(self) -> bool:
        return self.plasma_wavelength == 0.0


class SphereGeometry(Frozen):
    radius: float = Field(DEFAULT_SPHERE_RADIUS, gt=0, description="Sphere radius in m")


class CorrugationProfile(Frozen):
    """Corrugation shape of both bodies without their relative placement"""

    period: float = Field(DEFAULT_PERIOD, gt=0)
    amplitude_plate: float = Field(DEFAULT_AMPLITUDE_PLATE, ge=0)
    amplitude_sphere: float = Field(DEFAULT_AMPLITUDE_SPHERE, ge=0)

    @property
    def contact_separation(self) -> float:
        return self.amplitude_plate + self.amplitude_sphere

    def place(self, mean_separation: float, phase: float = 0.0) -> "CorrugationPair":
        return CorrugationPair(
            period=self.period,
            amplitude_plate=self.amplitude_plate,
            amplitude_sphere=self.amplitude_sphere,
            phase=phase,
            mean_separation=mean_separation,
        )


class CorrugationPair(CorrugationProfile):
    """Two aligned sinusoidal corrugations at a mean separation and relative phase"""

    phase: float = 0.0
    mean_separation: float = Field(..., gt=0)

    @field_validator('phase')
    @classmethod
    def reduce_phase(cls, v):
        if not math.isfinite(v):
            raise ValueError('Phase must be finite')
        reduced = math.fmod(v, TWO_PI)
        if reduced < 0:
            reduced += TWO_PI
        # fmod of a value just below a multiple of 2π can round up to 2π
        return 0.0 if reduced >= TWO_PI else reduced

    @model_validator(mode='after')
    def surfaces_do_not_touch(self):
        if self.mean_separation <= self.amplitude_plate + self.amplitude_sphere:
            raise ValueError(
                f'Mean separation {self.mean_separation:.6g} m must exceed A1 + A2 = '
                f'{self.amplitude_plate + self.amplitude_sphere:.6g} m (surfaces would touch)'
            )
        return self

    @property
    def profile(self) -> CorrugationProfile:
        return CorrugationProfile(
            period=self.period,
            amplitude_plate=self.amplitude_plate,
            amplitude_sphere=self.amplitude_sphere,
        )

    def with_phase(self, phase: float) -> "CorrugationPair":
        return self.profile.place(self.mean_separation, phase)

    def with_separation(self, mean_separation: float) -> "CorrugationPair":
        return self.profile.place(mean_separation, self.phase)


class EffectiveCorrugation(Frozen):
    b: float = Field(..., ge=0)
    alpha: float
    beta: float = Field(..., ge=0, lt=1)


# Force results
class LateralForceResult(Frozen):
    force: float
    ideal_force: float
    bracket_factor: float
    beta: float
    phase: float
    separation: float
    validity_flags: List[ValidityFlag] = []
    pft_accuracy: float = PFT_ACCURACY
    energy_accuracy: Tuple[float, float] = PLATE_ENERGY_ACCURACY

    @field_validator('validity_flags')
    @classmethod
    def sort_flags(cls, v):
        return sorted(set(v), key=lambda f: f.value)


# Calibration
class CalibrationSample(Frozen):
    applied_voltage: float
    deflection_signal: float

    @model_validator(mode='after')
    def finite_values(self):
        if not (math.isfinite(self.applied_voltage) and math.isfinite(self.deflection_signal)):
            raise ValueError('Calibration samples must be finite')
        return self


class CalibrationResult(Frozen):
    spring_constant: float = Field(..., gt=0)
    residual_potential: float
    fit_residual: float = Field(..., ge=0)
    n_samples: int


class CantileverIsolation(Frozen):
    torsional_spring_constant: float = Field(..., gt=0)
    bending_spring_constant: float = Field(..., gt=0)
    ratio: float
    isolated: bool


# Measurement pipeline
class ScanConfig(Frozen):
    step: float = Field(DEFAULT_SCAN_STEP, gt=0)
    n_steps: Optional[int] = Field(None, ge=3, description="None covers two corrugation periods")
    n_scans: int = Field(DEFAULT_SCAN_COUNT, ge=1)
    noise_sigma: float = Field(6.0e-12, ge=0)
    tilt_slope: float = 0.0
    z_correction_enabled: bool = True
    rng_seed: int = Field(0, ge=0)

    def resolved_steps(self, period: float) -> int:
        if self.n_steps is not None:
            return self.n_steps
        return int(math.ceil(2.0 * period / self.step))


class ScanSet(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    displacements: np.ndarray
    forces: np.ndarray
    mean_force: np.ndarray

    @model_validator(mode='after')
    def consistent_shapes(self):
        if self.forces.ndim != 2:
            raise ValueError('forces must be a matrix of n_scans x n_steps')
        n_scans, n_steps = self.forces.shape
        if n_scans < 1:
            raise ValueError('A scan set needs at least one scan')
        if self.displacements.shape != (n_steps,) or self.mean_force.shape != (n_steps,):
            raise ValueError('displacements and mean_force must have one entry per step')
        for arr in (self.displacements, self.forces, self.mean_force):
            arr.setflags(write=False)
        return self

    @classmethod
    def from_forces(cls, displacements, forces) -> "ScanSet":
        forces = np.array(forces, dtype=float, ndmin=2)
        return cls(
            displacements=np.array(displacements, dtype=float),
            forces=forces,
            mean_force=forces.mean(axis=0),
        )

    @property
    def n_scans(self) -> int:
        return self.forces.shape[0]

    @property
    def n_steps(self) -> int:
        return self.forces.shape[1]


class SineFit(Frozen):
    amplitude: float = Field(..., ge=0)
    phase: float
    offset: float
    rms_residual: float = Field(..., ge=0)


class PowerLawFit(Frozen):
    slope: float
    intercept: float
    slope_stderr: float = Field(..., ge=0)
    n_points: int


class ConfidenceInterval(Frozen):
    mean_amplitude: float
    sigma_mean: float = Field(..., ge=0)
    systematic: float = Field(..., ge=0)
    student_t: float = Field(..., ge=0)
    delta_total: float = Field(..., ge=0)
    confidence_level: float = Field(0.95, gt=0, lt=1)
    n_samples: int

    @computed_field
    @property
    def relative_precision(self) -> float:
        if self.mean_amplitude == 0:
            return math.inf
        return self.delta_total / abs(self.mean_amplitude)


class ScanAnalysis(Frozen):
    mean_fit: SineFit
    per_scan_amplitudes: List[float]
    confidence: Optional[ConfidenceInterval] = None
    inverted_separation: Optional[float] = None


# Command-line configuration
class AnalysisConfig(Frozen):
    systematic_fraction: float = Field(DEFAULT_SYSTEMATIC_FRACTION, ge=0)
    student_t: float = Field(DEFAULT_STUDENT_T, gt=0)
    confidence_level: float = Field(0.95, gt=0, lt=1)


class ForceCurveConfig(Frozen):
    phase: float = math.pi / 2
    z_min: float = Field(2.0e-7, gt=0)
    z_max: float = Field(3.0e-7, gt=0)
    z_points: int = Field(51, ge=0)
    phase_points: int = Field(73, ge=2)


class CalibrationConfig(Frozen):
    spring_constant: float = Field(TORSIONAL_SPRING_CONSTANT, gt=0)
    residual_potential: float = RESIDUAL_POTENTIAL
    separation: float = Field(1.0e-6, gt=0)
    phase: float = 0.0
    voltage_span: float = Field(0.5, gt=0)
    voltage_points: int = Field(11, ge=3)


def separation_schedule(closest: float, step: float, count: int) -> List[float]:
    """Separations closest, closest + step, ... as reached by repeated z-piezo steps"""
    if closest <= 0 or step <= 0 or count < 1:
        raise DomainError("Schedule needs closest > 0, step > 0 and count >= 1")
    return [closest + i * step for i in range(count)]


class RunConfig(Frozen):
    plasma_wavelength: float = Field(DEFAULT_PLASMA_WAVELENGTH, ge=0)
    sphere_radius: float = Field(DEFAULT_SPHERE_RADIUS, gt=0)
    period: float = Field(DEFAULT_PERIOD, gt=0)
    amplitude_plate: float = Field(DEFAULT_AMPLITUDE_PLATE, ge=0)
    amplitude_sphere: float = Field(DEFAULT_AMPLITUDE_SPHERE, ge=0)
    separations: List[float] = Field(default_factory=lambda: separation_schedule(
        DEFAULT_CLOSEST_SEPARATION, DEFAULT_SEPARATION_STEP, DEFAULT_SEPARATION_COUNT))
    seed: int = Field(0, ge=0)
    output_dir: str = "out"
    scan: ScanConfig = ScanConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    force_curve: ForceCurveConfig = ForceCurveConfig()
    calibration: CalibrationConfig = CalibrationConfig()

    @field_validator('separations')
    @classmethod
    def positive_separations(cls, v):
        bad = [z for z in v if not z > 0]
        if bad:
            raise ValueError(f'Separations must be positive, got {bad}')
        return v

    @model_validator(mode='after')
    def geometry_invariants(self):
        contact = self.amplitude_plate + self.amplitude_sphere
        violations = [
            f'separation {z:.6g} m does not exceed A1 + A2 = {contact:.6g} m'
            for z in self.separations if z <= contact
        ]
        if self.force_curve.z_min > self.force_curve.z_max:
            violations.append('force_curve.z_min must not exceed force_curve.z_max')
        if self.force_curve.z_points > 0 and self.force_curve.z_min <= contact:
            violations.append(f'force_curve.z_min {self.force_curve.z_min:.6g} m does not exceed A1 + A2')
        if self.calibration.separation <= contact:
            violations.append(f'calibration.separation {self.calibration.separation:.6g} m does not exceed A1 + A2')
        if violations:
            raise ValueError('; '.join(violations))
        return self

    @property
    def material(self) -> Material:
        return Material(plasma_wavelength=self.plasma_wavelength)

    @property
    def sphere(self) -> SphereGeometry:
        return SphereGeometry(radius=self.sphere_radius)

    @property
    def profile(self) -> CorrugationProfile:
        return CorrugationProfile(
            period=self.period,
            amplitude_plate=self.amplitude_plate,
            amplitude_sphere=self.amplitude_sphere,
        )


# Reports
class CheckStatus(str, Enum):
    PASSED = "pass"
    FAILED = "fail"
    SKIPPED = "skip"


class CheckResult(BaseModel):
    name: str
    status: CheckStatus
    measured_error: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class SeparationRecord(BaseModel):
    separation: float
    amplitude: float
    phase_at_max: Optional[float] = None
    inverted_separation: Optional[float] = None
    validity_flags: List[ValidityFlag] = []


class RunReport(BaseModel):
    tool_version: str
    command: str
    config: Dict[str, Any]
    separations: List[SeparationRecord] = []
    sine_fit: Optional[SineFit] = None
    power_law: Optional[PowerLawFit] = None
    confidence: Optional[ConfidenceInterval] = None
    calibration: Optional[CalibrationResult] = None
    isolation: Optional[CantileverIsolation] = None
    checks: List[CheckResult] = []

    @property
    def passed(self) -> bool:
        return all(c.status != CheckStatus.FAILED for c in self.checks)
