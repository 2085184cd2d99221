"""
Command-line frontend: force-curve, lateral-scan, slope, calibrate and verify.

Every subcommand reads the flat key/value config, applies the command-line
overrides, writes CSV tables (and SVG plots with --svg) into the output directory
and finishes with report.json.
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from constants import TOOL_VERSION
from electrostatics import electrostatic_force
from exceptions import EXIT_OK, EXIT_VALIDATION, CasimirError, ConfigValidationError, VerificationFailed
from io_formats import (
    FORCE_CURVE_HEADER,
    PHASE_CURVE_HEADER,
    SLOPE_HEADER,
    PlotSeries,
    format_flags,
    load_config,
    read_calibration_csv,
    svg_plot,
    validate_config,
    write_calibration_csv,
    write_csv,
    write_record_csv,
    write_scan_csv,
    write_text,
)
from logging_config import OperationLogger, configure_logging, get_cli_logger
from pdf_service import pdf_service
from schemas import CheckStatus, RunConfig, RunReport, SeparationRecord
from services import (
    CalibrationService,
    ForceCurveService,
    LateralScanService,
    ReportService,
    SlopeService,
)
from verification import VerificationService

logger = get_cli_logger()


def _override(config: RunConfig, section: Optional[str] = None, **values: Any) -> RunConfig:
    """Re-validate config with the non-None values replaced"""
    values = {k: v for k, v in values.items() if v is not None}
    if not values:
        return config
    data = config.model_dump()
    target = data[section] if section else data
    target.update(values)
    return validate_config(data)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < command-line flags"""
    config = load_config(args.config)
    return _override(config, seed=args.seed, plasma_wavelength=args.lambda_p, output_dir=args.out)


def _closest(config: RunConfig) -> float:
    if not config.separations:
        raise ConfigValidationError(["separations: at least one separation is required"])
    return min(config.separations)


def _out(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _finish(report: RunReport, config: RunConfig) -> Path:
    path = ReportService.write_json(report, _out(config, "report.json"))
    logger.info(f"Report written to {path}")
    return path


def cmd_force_curve(args: argparse.Namespace, config: RunConfig) -> RunReport:
    config = _override(config, "force_curve", phase=args.phase, z_min=args.z_min,
                       z_max=args.z_max, z_points=args.z_points)
    report = ReportService.new_report("force-curve", config)

    if args.phase_sweep:
        z = args.z if args.z is not None else _closest(config)
        results = ForceCurveService.over_phase(config, z, config.force_curve.phase_points)
        rows = [[r.phase, r.force, r.bracket_factor, r.beta, format_flags(r.validity_flags)] for r in results]
        path = write_csv(_out(config, "phase_curve.csv"), PHASE_CURVE_HEADER, rows)
        if args.svg:
            series = [PlotSeries(label=f"z = {z * 1e9:.1f} nm", x=[r.phase for r in results],
                                 y=[r.force for r in results])]
            write_text(_out(config, "phase_curve.svg"),
                       svg_plot(series, "Lateral force over phase", "phase (rad)", "force (N)"))
    else:
        separations = ForceCurveService.separation_grid(config)
        results = ForceCurveService.over_separation(config, separations, config.force_curve.phase)
        rows = [[r.separation, r.force, r.bracket_factor, r.beta, format_flags(r.validity_flags)] for r in results]
        path = write_csv(_out(config, "force_curve.csv"), FORCE_CURVE_HEADER, rows)
        if args.svg:
            series = [PlotSeries(label=f"phase = {config.force_curve.phase:.3f} rad",
                                 x=[r.separation for r in results], y=[abs(r.force) for r in results])]
            write_text(_out(config, "force_curve.svg"),
                       svg_plot(series, "Lateral force over separation", "z (m)", "|force| (N)",
                                log_x=True, log_y=True))

    print(f"Wrote {len(rows)} rows to {path}")
    return report


def cmd_lateral_scan(args: argparse.Namespace, config: RunConfig) -> RunReport:
    z = args.z if args.z is not None else _closest(config)
    scan, analysis = LateralScanService.run(config, z)
    fit, ci = analysis.mean_fit, analysis.confidence

    write_scan_csv(_out(config, "lateral_scan.csv"), scan)
    write_record_csv(_out(config, "lateral_fit.csv"), {
        "z_m": z,
        "amplitude_n": fit.amplitude,
        "phase_rad": fit.phase,
        "offset_n": fit.offset,
        "rms_residual_n": fit.rms_residual,
        "inverted_z_m": analysis.inverted_separation if analysis.inverted_separation is not None else math.nan,
        "sigma_mean_n": ci.sigma_mean if ci else math.nan,
        "systematic_n": ci.systematic if ci else math.nan,
        "student_t": ci.student_t if ci else math.nan,
        "delta_total_n": ci.delta_total if ci else math.nan,
    })

    if args.svg:
        theta = 2.0 * math.pi * scan.displacements / config.period
        fitted = fit.amplitude * np.sin(theta + fit.phase) + fit.offset
        series = [
            PlotSeries(label="mean of scans", x=scan.displacements.tolist(), y=scan.mean_force.tolist(),
                       style="points", color="#6b7280"),
            PlotSeries(label="best-fit sine", x=scan.displacements.tolist(), y=fitted.tolist(), color="#b91c1c"),
        ]
        write_text(_out(config, "lateral_scan.svg"),
                   svg_plot(series, f"Lateral scan at z = {z * 1e9:.1f} nm", "displacement (m)", "force (N)"))

    report = ReportService.new_report("lateral-scan", config)
    report.sine_fit = fit
    report.confidence = ci
    report.separations = [SeparationRecord(separation=z, amplitude=fit.amplitude,
                                           inverted_separation=analysis.inverted_separation)]

    inverted = "n/a" if analysis.inverted_separation is None else f"{analysis.inverted_separation * 1e9:.2f} nm"
    spread = f" ± {ci.delta_total:.2g} N" if ci else ""
    print(f"Amplitude {fit.amplitude:.4g} N{spread} at z = {z * 1e9:.2f} nm, inverted z = {inverted}")
    return report


def cmd_slope(args: argparse.Namespace, config: RunConfig) -> RunReport:
    records = SlopeService.amplitudes(config, exact_power=args.exact_power, workers=args.workers)
    write_csv(_out(config, "slope.csv"), SLOPE_HEADER, [[r.separation, r.amplitude] for r in records])
    fit = SlopeService.fit(records)
    write_record_csv(_out(config, "power_law.csv"), {
        "slope": fit.slope, "slope_stderr": fit.slope_stderr,
        "intercept": fit.intercept, "n_points": fit.n_points,
    })

    if args.svg:
        zs = [r.separation for r in records]
        line_z = np.geomspace(min(zs), max(zs), 50)
        series = [
            PlotSeries(label="amplitude", x=zs, y=[r.amplitude for r in records], style="points"),
            PlotSeries(label=f"slope {fit.slope:.2f}", x=line_z.tolist(),
                       y=np.exp(fit.intercept - fit.slope * np.log(line_z)).tolist(), color="#b91c1c"),
        ]
        write_text(_out(config, "slope.svg"),
                   svg_plot(series, "Amplitude over separation", "z (m)", "amplitude (N)",
                            log_x=True, log_y=True))

    report = ReportService.new_report("slope", config)
    report.separations = records
    report.power_law = fit
    print(f"Power-law slope {fit.slope:.4f} ± {fit.slope_stderr:.4f} over {fit.n_points} separations")
    return report


def cmd_calibrate(args: argparse.Namespace, config: RunConfig) -> RunReport:
    z = args.z if args.z is not None else config.calibration.separation
    if args.synthesize:
        samples = CalibrationService.synthesize(config, z, smooth=args.smooth)
        write_calibration_csv(args.synthesize, samples)
        logger.info(f"Synthetic sweep of {len(samples)} samples written to {args.synthesize}")
    source = args.input or args.synthesize
    if not source:
        raise ConfigValidationError(["calibrate: an input CSV or --synthesize PATH is required"])
    samples = read_calibration_csv(source)
    result = CalibrationService.calibrate(samples, config, z, smooth=args.smooth)
    isolation = CalibrationService.isolation(result, smooth=args.smooth)

    write_record_csv(_out(config, "calibration.csv"), {
        "spring_constant_n_per_m": result.spring_constant,
        "residual_potential_v": result.residual_potential,
        "fit_residual": result.fit_residual,
        "n_samples": result.n_samples,
        "spring_constant_ratio": isolation.ratio,
        "lateral_isolation_ok": int(isolation.isolated),
    })

    if args.svg:
        pair = CalibrationService.geometry(config, z, args.smooth)
        voltages = [s.applied_voltage for s in samples]
        model_v = np.linspace(min(voltages), max(voltages), 100)
        model = [electrostatic_force(pair, float(v), result.residual_potential, config.sphere)
                 / result.spring_constant for v in model_v]
        series = [
            PlotSeries(label="sweep", x=voltages, y=[s.deflection_signal for s in samples], style="points"),
            PlotSeries(label="fitted parabola", x=model_v.tolist(), y=model, color="#b91c1c"),
        ]
        write_text(_out(config, "calibration.svg"),
                   svg_plot(series, "Electrostatic calibration", "V1 (V)", "deflection"))

    report = ReportService.new_report("calibrate", config)
    report.calibration = result
    report.isolation = isolation
    print(f"Spring constant {result.spring_constant:.6g} N/m, V0 = {result.residual_potential:.6g} V, "
          f"residual {result.fit_residual:.3g}")
    print(f"k_tor/k_ben = {isolation.ratio:.3g}, lateral isolation {'ok' if isolation.isolated else 'insufficient'}")
    return report


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> RunReport:
    report = ReportService.new_report("verify", config)
    report.checks = VerificationService.run(config)

    for check in report.checks:
        error = "" if check.measured_error is None else f" error={check.measured_error:.3g}"
        print(f"[{check.status.value}] {check.name}{error} {check.detail}".rstrip())

    if args.pdf:
        buffer = pdf_service.generate_report_pdf(report)
        path = _out(config, "report.pdf")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(buffer.getvalue())
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration file (key = value lines)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--seed", type=int, help="run seed; sub-seeds derive from it")
    common.add_argument("--lambda-p", dest="lambda_p", type=float, help="plasma wavelength in m; 0 for an ideal metal")
    common.add_argument("--verbose", action="store_true", help="debug logging with source lines")
    common.add_argument("--log-dir", dest="log_dir", type=Path, help="also log to rotating files here")

    parser = argparse.ArgumentParser(prog="casimir", description="Lateral Casimir force between corrugated surfaces")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("force-curve", parents=[common], help="tabulate the closed-form lateral force")
    p.add_argument("--phase", type=float)
    p.add_argument("--z-min", dest="z_min", type=float)
    p.add_argument("--z-max", dest="z_max", type=float)
    p.add_argument("--z-points", dest="z_points", type=int)
    p.add_argument("--phase-sweep", action="store_true", help="tabulate over phase at fixed z instead")
    p.add_argument("--z", type=float, help="separation of the phase sweep")
    p.set_defaults(handler=cmd_force_curve)

    p = sub.add_parser("lateral-scan", parents=[common], help="simulate and fit repeated lateral scans")
    p.add_argument("--z", type=float, help="mean separation (default: closest configured)")
    p.set_defaults(handler=cmd_lateral_scan)

    p = sub.add_parser("slope", parents=[common], help="power-law fit of amplitude over separation")
    p.add_argument("--exact-power", dest="exact_power", type=float, help="replace amplitudes by an exact power law")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=cmd_slope)

    p = sub.add_parser("calibrate", parents=[common], help="spring constant and V0 from a voltage sweep")
    p.add_argument("input", nargs="?", help="CSV with header v1_volts,deflection")
    p.add_argument("--z", type=float, help="separation of the sweep (default: calibration.separation)")
    p.add_argument("--smooth", action="store_true", help="treat the surfaces as uncorrugated")
    p.add_argument("--synthesize", metavar="PATH", help="write a synthetic sweep from the configured k and V0")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("verify", parents=[common], help="run the self-check suite")
    p.add_argument("--pdf", action="store_true", help="also write report.pdf")
    p.set_defaults(handler=cmd_verify)

    return parser


def _validation_messages(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in err['loc']) or 'input'}: {err['msg']}" for err in error.errors()]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(verbose=args.verbose, log_dir=args.log_dir)

    try:
        config = resolve_config(args)
        with OperationLogger(logger, args.command, output_dir=config.output_dir):
            report = args.handler(args, config)
            _finish(report, config)
        if not report.passed:
            failed = [c.name for c in report.checks if c.status == CheckStatus.FAILED]
            raise VerificationFailed(f"{len(failed)} checks failed: {', '.join(failed)}")
    except CasimirError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        for message in _validation_messages(e):
            print(f"error: {message}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
