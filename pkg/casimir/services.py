from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from constants import BENDING_SPRING_CONSTANT, TORSIONAL_SPRING_CONSTANT, TOOL_VERSION
from electrostatics import (
    calibrate_from_sweep,
    default_sweep_voltages,
    lateral_isolation_ok,
    simulate_sweep,
    spring_constant_ratio,
)
from io_formats import config_echo, format_float, write_text
from lateral_force import lateral_amplitude, lateral_force_closed
from logging_config import get_cli_logger
from pipeline import analyze_scan, derive_seed, fit_power_law, invert_separation, simulate_scan
from schemas import (
    CalibrationResult,
    CalibrationSample,
    CantileverIsolation,
    LateralForceResult,
    PowerLawFit,
    RunConfig,
    RunReport,
    ScanAnalysis,
    ScanSet,
    SeparationRecord,
)

logger = get_cli_logger()


class ForceCurveService:
    @staticmethod
    def separation_grid(config: RunConfig) -> List[float]:
        fc = config.force_curve
        if fc.z_points == 0:
            return []
        if fc.z_points == 1:
            return [fc.z_min]
        return [float(z) for z in np.linspace(fc.z_min, fc.z_max, fc.z_points)]

    @staticmethod
    def over_separation(config: RunConfig, separations: Sequence[float], phase: float,
                        coefficients: Optional[Sequence[float]] = None) -> List[LateralForceResult]:
        """Closed-form lateral force at fixed phase for each separation"""
        profile = config.profile
        return [
            lateral_force_closed(profile.place(z, phase), config.sphere, config.material, coefficients)
            for z in separations
        ]

    @staticmethod
    def over_phase(config: RunConfig, z: float, points: int) -> List[LateralForceResult]:
        """Closed-form lateral force over one full phase period at fixed separation"""
        profile = config.profile
        phases = np.linspace(0.0, 2.0 * np.pi, points)
        return [
            lateral_force_closed(profile.place(z, float(phi)), config.sphere, config.material)
            for phi in phases
        ]


class LateralScanService:
    @staticmethod
    def run(config: RunConfig, z: float,
            coefficients: Optional[Sequence[float]] = None) -> Tuple[ScanSet, ScanAnalysis]:
        """Simulate the repeated scans at z and analyse them"""
        seed = derive_seed(config.seed, f"lateral-scan:{format_float(z)}")
        scan_config = config.scan.model_copy(update={"rng_seed": seed})
        scan = simulate_scan(scan_config, config.profile, z, config.sphere, config.material, coefficients)
        analysis = analyze_scan(scan, config.profile, config.sphere, config.material,
                                config.analysis, coefficients)
        logger.info(
            f"Scan at z={z:.6g} m: amplitude {analysis.mean_fit.amplitude:.4g} N, "
            f"inverted z={analysis.inverted_separation}"
        )
        return scan, analysis


class SlopeService:
    @staticmethod
    def amplitudes(config: RunConfig, exact_power: Optional[float] = None,
                   workers: int = 1) -> List[SeparationRecord]:
        """
        Lateral-force amplitude and its inverted separation at every configured separation.

        exact_power replaces the physics with A(z) = A(z₀)(z/z₀)^(−p), for checking the fit.
        Results keep the configured order whatever the worker count.
        """
        profile, sphere, material = config.profile, config.sphere, config.material

        def record(z: float) -> SeparationRecord:
            amplitude, phase_at_max = lateral_amplitude(profile, z, sphere, material)
            flags = lateral_force_closed(profile.place(z, phase_at_max), sphere, material).validity_flags
            return SeparationRecord(separation=z, amplitude=amplitude, phase_at_max=phase_at_max,
                                    validity_flags=flags)

        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            records = list(executor.map(record, config.separations))

        if exact_power is not None and records:
            z0, a0 = records[0].separation, records[0].amplitude
            records = [
                r.model_copy(update={"amplitude": a0 * (r.separation / z0) ** (-exact_power)})
                for r in records
            ]

        for r in records:
            r.inverted_separation = invert_separation(r.amplitude, profile, sphere, material)
        return records

    @staticmethod
    def fit(records: Sequence[SeparationRecord]) -> PowerLawFit:
        return fit_power_law([r.separation for r in records], [r.amplitude for r in records])


class CalibrationService:
    @staticmethod
    def calibrate(samples: Sequence[CalibrationSample], config: RunConfig, z: float,
                  smooth: bool = False) -> CalibrationResult:
        pair = CalibrationService.geometry(config, z, smooth)
        return calibrate_from_sweep(samples, pair, config.sphere)

    @staticmethod
    def isolation(result: CalibrationResult, smooth: bool = False) -> CantileverIsolation:
        """
        Torsional to bending stiffness of the cantilever.

        A corrugated sweep measures the torsional mode and a smooth one the bending
        mode; the other constant is the reported value for this cantilever.
        """
        if smooth:
            torsional, bending = TORSIONAL_SPRING_CONSTANT, result.spring_constant
        else:
            torsional, bending = result.spring_constant, BENDING_SPRING_CONSTANT
        isolation = CantileverIsolation(
            torsional_spring_constant=torsional,
            bending_spring_constant=bending,
            ratio=spring_constant_ratio(torsional, bending),
            isolated=lateral_isolation_ok(torsional, bending),
        )
        if not isolation.isolated:
            logger.warning(f"k_tor/k_ben = {isolation.ratio:.3g} is too small to isolate the lateral force")
        return isolation

    @staticmethod
    def synthesize(config: RunConfig, z: float, smooth: bool = False) -> List[CalibrationSample]:
        cal = config.calibration
        pair = CalibrationService.geometry(config, z, smooth)
        voltages = default_sweep_voltages(cal.voltage_span, cal.voltage_points)
        return simulate_sweep(voltages, cal.spring_constant, cal.residual_potential, pair, config.sphere,
                              seed=derive_seed(config.seed, "calibration"))

    @staticmethod
    def geometry(config: RunConfig, z: float, smooth: bool):
        profile = config.profile
        if smooth:
            profile = profile.model_copy(update={"amplitude_plate": 0.0, "amplitude_sphere": 0.0})
        return profile.place(z, config.calibration.phase)


class ReportService:
    @staticmethod
    def new_report(command: str, config: RunConfig) -> RunReport:
        return RunReport(tool_version=TOOL_VERSION, command=command, config=config_echo(config))

    @staticmethod
    def write_json(report: RunReport, path: Path) -> Path:
        return write_text(path, report.model_dump_json(indent=2) + "\n")
