"""
Registry of self-checks run by `verify`: module invariants, the closed form
against its quadrature oracle, and the measured values of the corrugated
sphere–plate experiment.
"""

import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from constants import (
    BENDING_SPRING_CONSTANT,
    DEFAULT_AMPLITUDE_PLATE,
    DEFAULT_AMPLITUDE_SPHERE,
    DEFAULT_CLOSEST_SEPARATION,
    DEFAULT_PERIOD,
    DEFAULT_SPHERE_RADIUS,
    RESIDUAL_POTENTIAL,
    TORSIONAL_SPRING_CONSTANT,
)
from electrostatics import calibrate_from_sweep, default_sweep_voltages, simulate_sweep
from energy import ideal_plate_energy, ideal_plate_pressure, plate_energy
from geometry import effective_amplitude, effective_params, profile_lower, profile_upper, separation
from lateral_force import (
    lateral_amplitude,
    lateral_force_closed,
    lateral_force_numeric,
    normal_force_pft,
    sphere_plate_energy,
)
from logging_config import get_cli_logger, log_performance
from pipeline import (
    combine_uncertainty,
    derive_seed,
    fit_power_law,
    fit_sine,
    invert_separation,
    simulate_scan,
)
from schemas import (
    CheckResult,
    CheckStatus,
    CorrugationProfile,
    Material,
    RunConfig,
    ScanConfig,
    SphereGeometry,
)

logger = get_cli_logger()

# Values reported for the measured configuration
MEASURED_AMPLITUDES = [(2.21e-7, 3.2e-13), (2.33e-7, 2.6e-13)]
AMPLITUDE_TOLERANCE = 0.05
INVERSION_TOLERANCE = 2.0e-9
BETA_AT_CLOSEST = 0.303
BETA_TOLERANCE = 0.001
SLOPE_RANGE = (3.9, 4.3)
ORACLE_TOLERANCE = 1e-4


class VerificationContext(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    coefficients: Optional[Sequence[float]] = None
    rng: np.random.Generator

    @property
    def material(self) -> Material:
        return self.config.material

    @property
    def sphere(self) -> SphereGeometry:
        return self.config.sphere

    @property
    def profile(self) -> CorrugationProfile:
        return self.config.profile

    @property
    def closest(self) -> float:
        return min(self.config.separations) if self.config.separations else DEFAULT_CLOSEST_SEPARATION

    @property
    def measured_geometry(self) -> bool:
        return (
            self.profile == CorrugationProfile(period=DEFAULT_PERIOD,
                                               amplitude_plate=DEFAULT_AMPLITUDE_PLATE,
                                               amplitude_sphere=DEFAULT_AMPLITUDE_SPHERE)
            and self.sphere.radius == DEFAULT_SPHERE_RADIUS
        )


class CheckDefinition(BaseModel):
    """A named self-check and the scope it applies to"""
    name: str
    description: str
    function: Callable[[VerificationContext], CheckResult]
    needs_conductivity: bool = False
    needs_measured_geometry: bool = False


def _compare(name: str, error: float, tolerance: float, detail: str = "") -> CheckResult:
    status = CheckStatus.PASSED if error <= tolerance else CheckStatus.FAILED
    return CheckResult(name=name, status=status, measured_error=float(error),
                       tolerance=float(tolerance), detail=detail)


class CheckRegistry:
    """Registry for managing verification checks"""

    def __init__(self):
        self.checks: Dict[str, CheckDefinition] = {}
        self._register_default_checks()

    def register_check(self, name: str, description: str,
                       function: Callable[[VerificationContext], CheckResult],
                       needs_conductivity: bool = False, needs_measured_geometry: bool = False):
        """Register a new check"""
        self.checks[name] = CheckDefinition(
            name=name,
            description=description,
            function=function,
            needs_conductivity=needs_conductivity,
            needs_measured_geometry=needs_measured_geometry,
        )

    def run_check(self, name: str, context: VerificationContext) -> CheckResult:
        """Run one check; exceptions count as failures"""
        if name not in self.checks:
            return CheckResult(name=name, status=CheckStatus.FAILED, detail=f"Check '{name}' not found")
        check = self.checks[name]

        if check.needs_conductivity and context.material.is_ideal:
            return CheckResult(name=name, status=CheckStatus.SKIPPED,
                               detail="skipped: depends on finite conductivity and λ_p = 0")
        if check.needs_measured_geometry and not context.measured_geometry:
            return CheckResult(name=name, status=CheckStatus.SKIPPED,
                               detail="skipped: geometry differs from the measured setup")

        try:
            result = check.function(context)
        except Exception as e:
            logger.error(f"Check {name} raised {type(e).__name__}: {e}")
            return CheckResult(name=name, status=CheckStatus.FAILED,
                               detail=f"{type(e).__name__}: {e}")
        logger.debug(f"Check {name}: {result.status.value} (error={result.measured_error})")
        return result

    def run_all(self, context: VerificationContext) -> List[CheckResult]:
        return [self.run_check(name, context) for name in self.checks]

    def _register_default_checks(self):
        self.register_check("energy.ideal_reduction", "λ_p = 0 reproduces the ideal plate energy",
                            _check_energy_ideal_reduction)
        self.register_check("energy.pressure_derivative", "pressure equals −dE/dz by finite difference",
                            _check_pressure_derivative)
        self.register_check("energy.cubic_scaling", "E(kz) = E(z)/k³", _check_cubic_scaling)
        self.register_check("energy.monotone", "plate energy negative and increasing on [λ_p, 10λ_p]",
                            _check_energy_monotone, needs_conductivity=True)
        self.register_check("geometry.gap_identity", "effective cosine reproduces the profile difference",
                            _check_gap_identity)
        self.register_check("geometry.alpha_branch", "α satisfies both component equations",
                            _check_alpha_branch)
        self.register_check("force.oracle_equivalence", "closed form matches the quadrature oracle",
                            _check_oracle_equivalence)
        self.register_check("force.odd_symmetry", "lateral force is odd and 2π-periodic in φ",
                            _check_odd_symmetry)
        self.register_check("force.ideal_bracket", "bracket factor is 1 for an ideal metal",
                            _check_ideal_bracket)
        self.register_check("force.energy_consistency", "energy derivatives reproduce both forces",
                            _check_energy_consistency)
        self.register_check("force.power_law_slope", "amplitude decays with exponent in [3.9, 4.3]",
                            _check_power_law_slope, needs_conductivity=True, needs_measured_geometry=True)
        self.register_check("acceptance.amplitudes", "closed form reproduces the measured amplitudes",
                            _check_measured_amplitudes, needs_conductivity=True, needs_measured_geometry=True)
        self.register_check("acceptance.inversion", "measured amplitudes invert to their separations",
                            _check_measured_inversion, needs_conductivity=True, needs_measured_geometry=True)
        self.register_check("acceptance.beta", "β at φ = π and the closest separation",
                            _check_beta_at_contact_phase, needs_measured_geometry=True)
        self.register_check("pipeline.confidence_arithmetic", "Δ_A = t·σ_Ā + systematic part",
                            _check_confidence_arithmetic)
        self.register_check("pipeline.sine_fit_exactness", "sine fit is exact on a pure sinusoid",
                            _check_sine_fit_exactness)
        self.register_check("pipeline.determinism", "same seed gives the same scans",
                            _check_determinism)
        self.register_check("pipeline.inversion_roundtrip", "inversion undoes the amplitude map",
                            _check_inversion_roundtrip)
        self.register_check("pipeline.tilt_correction", "z correction cancels tilt drift",
                            _check_tilt_correction)
        self.register_check("calibration.roundtrip", "sweep calibration recovers k and V₀",
                            _check_calibration_roundtrip)


# Core energy
def _check_energy_ideal_reduction(ctx: VerificationContext) -> CheckResult:
    z = ctx.rng.uniform(5e-8, 5e-6, 10_000)
    ideal = ideal_plate_energy(z)
    error = np.max(np.abs(plate_energy(z, Material(plasma_wavelength=0.0)) - ideal) / np.abs(ideal))
    return _compare("energy.ideal_reduction", error, 0.0)


def _check_pressure_derivative(ctx: VerificationContext) -> CheckResult:
    z = np.geomspace(5e-8, 5e-6, 50)
    h = z * 1e-5
    finite = -(np.asarray(ideal_plate_energy(z + h)) - np.asarray(ideal_plate_energy(z - h))) / (2 * h)
    pressure = np.asarray(ideal_plate_pressure(z))
    error = np.max(np.abs(finite - pressure) / np.abs(pressure))
    return _compare("energy.pressure_derivative", error, 1e-6)


def _check_cubic_scaling(ctx: VerificationContext) -> CheckResult:
    z = ctx.rng.uniform(5e-8, 5e-6, 100)
    k = ctx.rng.uniform(0.1, 10.0, 100)
    expected = np.asarray(ideal_plate_energy(z)) / k ** 3
    error = np.max(np.abs(np.asarray(ideal_plate_energy(k * z)) - expected) / np.abs(expected))
    return _compare("energy.cubic_scaling", error, 1e-12)


def _check_energy_monotone(ctx: VerificationContext) -> CheckResult:
    lam = ctx.material.plasma_wavelength
    z = np.linspace(lam, 10 * lam, 400)
    energy = np.asarray(plate_energy(z, ctx.material))
    violations = int(np.sum(energy >= 0) + np.sum(np.diff(energy) <= 0))
    return _compare("energy.monotone", violations, 0, f"{violations} grid points violate")


# Geometry
def _random_pairs(ctx: VerificationContext, count: int):
    for _ in range(count):
        a1, a2 = ctx.rng.uniform(0.0, 8e-8, 2)
        z = a1 + a2 + ctx.rng.uniform(1e-9, 3e-7)
        phase = ctx.rng.uniform(-2 * math.pi, 2 * math.pi)
        yield CorrugationProfile(period=ctx.profile.period, amplitude_plate=a1,
                                 amplitude_sphere=a2).place(z, phase)


def _check_gap_identity(ctx: VerificationContext) -> CheckResult:
    error = 0.0
    for pair in _random_pairs(ctx, 50):
        x = np.linspace(0.0, pair.period, 256, endpoint=False)
        direct = np.asarray(profile_upper(x, pair)) - np.asarray(profile_lower(x, pair))
        error = max(error, float(np.max(np.abs(np.asarray(separation(x, pair)) - direct))) / pair.mean_separation)
    return _compare("geometry.gap_identity", error, 1e-12)


def _check_alpha_branch(ctx: VerificationContext) -> CheckResult:
    error = 0.0
    for pair in _random_pairs(ctx, 200):
        eff = effective_params(pair)
        scale = pair.amplitude_plate + pair.amplitude_sphere
        cos_err = abs(eff.b * math.cos(eff.alpha) - pair.amplitude_sphere * math.sin(pair.phase))
        sin_err = abs(eff.b * math.sin(eff.alpha) - (pair.amplitude_sphere * math.cos(pair.phase) - pair.amplitude_plate))
        error = max(error, max(cos_err, sin_err) / scale)
    return _compare("geometry.alpha_branch", error, 1e-12)


def _check_beta_at_contact_phase(ctx: VerificationContext) -> CheckResult:
    beta = effective_params(ctx.profile.place(ctx.closest, math.pi)).beta
    return _compare("acceptance.beta", abs(beta - BETA_AT_CLOSEST), BETA_TOLERANCE, f"beta = {beta:.6f}")


# Lateral force
def _oracle_grid(ctx: VerificationContext):
    separations = np.linspace(ctx.closest, 1.4 * ctx.closest, 5)
    phases = [k * math.pi / 4 for k in range(8)]
    materials = [Material(plasma_wavelength=0.0)]
    if not ctx.material.is_ideal:
        materials.append(ctx.material)
    return separations, phases, materials


@log_performance("cli")
def _check_oracle_equivalence(ctx: VerificationContext) -> CheckResult:
    separations, phases, materials = _oracle_grid(ctx)
    error = 0.0
    for material in materials:
        closed, numeric = [], []
        for z in separations:
            for phi in phases:
                pair = ctx.profile.place(float(z), phi)
                closed.append(lateral_force_closed(pair, ctx.sphere, material, ctx.coefficients).force)
                numeric.append(lateral_force_numeric(pair, ctx.sphere, material))
        closed, numeric = np.array(closed), np.array(numeric)
        error = max(error, float(np.max(np.abs(numeric - closed)) / np.max(np.abs(closed))))
    detail = f"{len(separations)} separations x {len(phases)} phases x {len(materials)} materials"
    return _compare("force.oracle_equivalence", error, ORACLE_TOLERANCE, detail)


def _check_odd_symmetry(ctx: VerificationContext) -> CheckResult:
    phases = np.linspace(0.05, math.pi - 0.05, 24)
    forward, mirrored, shifted = [], [], []
    for phi in phases:
        forward.append(lateral_force_closed(ctx.profile.place(ctx.closest, phi), ctx.sphere, ctx.material).force)
        mirrored.append(lateral_force_closed(ctx.profile.place(ctx.closest, -phi), ctx.sphere, ctx.material).force)
        shifted.append(lateral_force_closed(ctx.profile.place(ctx.closest, phi + 2 * math.pi), ctx.sphere,
                                            ctx.material).force)
    forward, mirrored, shifted = np.array(forward), np.array(mirrored), np.array(shifted)
    scale = np.max(np.abs(forward))
    error = max(np.max(np.abs(forward + mirrored)), np.max(np.abs(forward - shifted))) / scale
    return _compare("force.odd_symmetry", error, 1e-12)


def _check_ideal_bracket(ctx: VerificationContext) -> CheckResult:
    separations, phases, _ = _oracle_grid(ctx)
    ideal = Material(plasma_wavelength=0.0)
    error = max(
        abs(lateral_force_closed(ctx.profile.place(float(z), phi), ctx.sphere, ideal).bracket_factor - 1.0)
        for z in separations for phi in phases
    )
    return _compare("force.ideal_bracket", error, 0.0)


def _check_energy_consistency(ctx: VerificationContext) -> CheckResult:
    error = 0.0
    for phi in (math.pi / 3, math.pi / 2, 2 * math.pi / 3):
        pair = ctx.profile.place(ctx.closest, phi)
        h = ctx.closest * 1e-4
        energy_up = sphere_plate_energy(pair.with_separation(ctx.closest + h), ctx.sphere, ctx.material)
        energy_down = sphere_plate_energy(pair.with_separation(ctx.closest - h), ctx.sphere, ctx.material)
        normal = normal_force_pft(pair, ctx.sphere, ctx.material)
        error = max(error, abs(-(energy_up - energy_down) / (2 * h) - normal) / abs(normal))

        dphi = 1e-3
        lateral = -(2 * math.pi / pair.period) * (
            sphere_plate_energy(pair.with_phase(phi + dphi), ctx.sphere, ctx.material)
            - sphere_plate_energy(pair.with_phase(phi - dphi), ctx.sphere, ctx.material)
        ) / (2 * dphi)
        numeric = lateral_force_numeric(pair, ctx.sphere, ctx.material)
        error = max(error, abs(lateral - numeric) / abs(numeric))
    return _compare("force.energy_consistency", error, ORACLE_TOLERANCE)


def _check_power_law_slope(ctx: VerificationContext) -> CheckResult:
    separations = ctx.config.separations
    if len(set(separations)) < 2:
        return CheckResult(name="force.power_law_slope", status=CheckStatus.SKIPPED,
                           detail="skipped: fewer than 2 distinct separations")
    amplitudes = [lateral_amplitude(ctx.profile, z, ctx.sphere, ctx.material)[0] for z in separations]
    fit = fit_power_law(separations, amplitudes)
    lo, hi = SLOPE_RANGE
    error = max(0.0, lo - fit.slope, fit.slope - hi)
    return _compare("force.power_law_slope", error, 0.0, f"slope = {fit.slope:.4f} ± {fit.slope_stderr:.4f}")


def _check_measured_amplitudes(ctx: VerificationContext) -> CheckResult:
    error, details = 0.0, []
    for z, measured in MEASURED_AMPLITUDES:
        force = lateral_force_closed(ctx.profile.place(z, math.pi / 2), ctx.sphere, ctx.material,
                                     ctx.coefficients).force
        error = max(error, abs(force - measured) / measured)
        details.append(f"z={z * 1e9:.0f} nm: {force:.4g} N")
    return _compare("acceptance.amplitudes", error, AMPLITUDE_TOLERANCE, "; ".join(details))


def _check_measured_inversion(ctx: VerificationContext) -> CheckResult:
    error, details = 0.0, []
    for z, measured in MEASURED_AMPLITUDES:
        inverted = invert_separation(measured, ctx.profile, ctx.sphere, ctx.material, ctx.coefficients)
        error = max(error, abs(inverted - z))
        details.append(f"{measured:.2g} N -> {inverted * 1e9:.2f} nm")
    return _compare("acceptance.inversion", error, INVERSION_TOLERANCE, "; ".join(details))


# Pipeline
def _check_confidence_arithmetic(ctx: VerificationContext) -> CheckResult:
    ci = combine_uncertainty(3.2e-13, 0.15e-13, 0.05, 2.0, n_samples=60)
    error = max(abs(ci.systematic - 0.16e-13), abs(ci.delta_total - 0.46e-13)) / 0.46e-13
    return _compare("pipeline.confidence_arithmetic", error, 1e-12,
                    f"systematic {ci.systematic:.3g} N, total {ci.delta_total:.3g} N")


def _check_sine_fit_exactness(ctx: VerificationContext) -> CheckResult:
    a, b, c = ctx.rng.normal(0.0, 1e-13, 3)
    period = ctx.profile.period
    x = np.sort(ctx.rng.uniform(0.0, 2 * period, 200))
    theta = 2 * math.pi * x / period
    fit = fit_sine(x, a * np.sin(theta) + b * np.cos(theta) + c, period)
    error = max(abs(fit.amplitude - math.hypot(a, b)), abs(fit.offset - c)) / math.hypot(a, b)
    return _compare("pipeline.sine_fit_exactness", error, 1e-9)


def _small_scan(ctx: VerificationContext, **overrides) -> ScanConfig:
    base = dict(step=ctx.profile.period / 100, n_steps=200, n_scans=5, noise_sigma=1e-14,
                rng_seed=derive_seed(ctx.config.seed, "verify:scan"))
    base.update(overrides)
    return ScanConfig(**base)


def _check_determinism(ctx: VerificationContext) -> CheckResult:
    scan_config = _small_scan(ctx)
    first = simulate_scan(scan_config, ctx.profile, ctx.closest, ctx.sphere, ctx.material)
    second = simulate_scan(scan_config, ctx.profile, ctx.closest, ctx.sphere, ctx.material)
    same = np.array_equal(first.forces, second.forces) and np.array_equal(first.mean_force, second.mean_force)
    return _compare("pipeline.determinism", 0.0 if same else 1.0, 0.0)


def _check_inversion_roundtrip(ctx: VerificationContext) -> CheckResult:
    lo = max(2.0e-7, 1.2 * ctx.profile.contact_separation)
    error = 0.0
    for z in ctx.rng.uniform(lo, 2 * lo, 5):
        amplitude, _ = lateral_amplitude(ctx.profile, float(z), ctx.sphere, ctx.material)
        inverted = invert_separation(amplitude, ctx.profile, ctx.sphere, ctx.material)
        error = max(error, abs(inverted - z))
    return _compare("pipeline.inversion_roundtrip", error, 1e-11)


def _check_tilt_correction(ctx: VerificationContext) -> CheckResult:
    flat = simulate_scan(_small_scan(ctx, noise_sigma=0.0), ctx.profile, ctx.closest, ctx.sphere, ctx.material)
    corrected = simulate_scan(_small_scan(ctx, noise_sigma=0.0, tilt_slope=0.01, z_correction_enabled=True),
                              ctx.profile, ctx.closest, ctx.sphere, ctx.material)
    drifting = simulate_scan(_small_scan(ctx, noise_sigma=0.0, tilt_slope=0.01, z_correction_enabled=False),
                             ctx.profile, ctx.closest, ctx.sphere, ctx.material)
    period = ctx.profile.period
    flat_amp = fit_sine(flat.displacements, flat.mean_force, period).amplitude
    drift_amp = fit_sine(drifting.displacements, drifting.mean_force, period).amplitude
    ok = np.array_equal(flat.forces, corrected.forces) and drift_amp != flat_amp
    return _compare("pipeline.tilt_correction", 0.0 if ok else 1.0, 0.0,
                    f"amplitude without correction shifts by {abs(drift_amp - flat_amp) / flat_amp:.2%}")


# Calibration
def _check_calibration_roundtrip(ctx: VerificationContext) -> CheckResult:
    voltages = default_sweep_voltages()
    error = 0.0
    cases = [
        (TORSIONAL_SPRING_CONSTANT, RESIDUAL_POTENTIAL, ctx.profile.place(ctx.closest, math.pi)),
        (BENDING_SPRING_CONSTANT, RESIDUAL_POTENTIAL,
         CorrugationProfile(period=ctx.profile.period, amplitude_plate=0.0, amplitude_sphere=0.0).place(1e-6)),
    ]
    for k, v0, pair in cases:
        samples = simulate_sweep(voltages, k, v0, pair, ctx.sphere)
        result = calibrate_from_sweep(samples, pair, ctx.sphere)
        error = max(error, abs(result.spring_constant - k) / k, abs(result.residual_potential - v0) / abs(v0))
    return _compare("calibration.roundtrip", error, 1e-9)


class VerificationService:
    @staticmethod
    def run(config: RunConfig, coefficients: Optional[Sequence[float]] = None,
            registry: Optional[CheckRegistry] = None) -> List[CheckResult]:
        """
        Run every registered check.

        coefficients replaces c₁..c₄ in the closed form only, leaving the oracle untouched.
        """
        context = VerificationContext(
            config=config,
            coefficients=coefficients,
            rng=np.random.default_rng(derive_seed(config.seed, "verify")),
        )
        results = (registry or CheckRegistry()).run_all(context)
        failed = [r.name for r in results if r.status == CheckStatus.FAILED]
        if failed:
            logger.warning(f"Verification failed: {', '.join(failed)}")
        return results
