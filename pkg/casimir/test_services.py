import json
import math

import numpy as np
import pytest

from exceptions import UnderdeterminedFitError
from schemas import CalibrationConfig, CalibrationResult, ForceCurveConfig, RunConfig, ScanConfig
from services import CalibrationService, ForceCurveService, LateralScanService, ReportService, SlopeService


@pytest.fixture
def config():
    return RunConfig(scan=ScanConfig(step=1.2e-8, n_steps=200, n_scans=4, noise_sigma=1e-14))


class TestForceCurveService:
    def test_separation_grid(self, config):
        assert len(ForceCurveService.separation_grid(config)) == 51
        empty = config.model_copy(update={"force_curve": ForceCurveConfig(z_points=0)})
        assert ForceCurveService.separation_grid(empty) == []
        single = config.model_copy(update={"force_curve": ForceCurveConfig(z_points=1)})
        assert ForceCurveService.separation_grid(single) == [2.0e-7]

    def test_aligned_phase_gives_zero_force(self, config):
        results = ForceCurveService.over_separation(config, [2.21e-7, 2.5e-7], phase=0.0)
        assert [r.force for r in results] == [0.0, 0.0]

    def test_phase_sweep_spans_one_period(self, config):
        results = ForceCurveService.over_phase(config, 2.21e-7, 9)
        assert results[0].phase == 0.0
        assert results[2].force == pytest.approx(3.222e-13, rel=2e-3)
        assert results[-1].force == pytest.approx(0.0, abs=1e-27)


class TestLateralScanService:
    def test_seed_is_derived_per_separation(self, config):
        scan_a, _ = LateralScanService.run(config, 2.21e-7)
        scan_b, _ = LateralScanService.run(config, 2.21e-7)
        scan_c, _ = LateralScanService.run(config, 2.33e-7)
        assert np.array_equal(scan_a.forces, scan_b.forces)
        # row differences cancel the force curve and leave only the noise
        assert not np.array_equal(scan_a.forces[0] - scan_a.forces[1], scan_c.forces[0] - scan_c.forces[1])

    def test_analysis_inverts_separation(self, config):
        _, analysis = LateralScanService.run(config, 2.33e-7)
        assert analysis.inverted_separation == pytest.approx(2.33e-7, abs=2e-9)


class TestSlopeService:
    def test_measured_separations(self, config):
        records = SlopeService.amplitudes(config)
        assert [r.separation for r in records] == config.separations
        assert 3.9 <= SlopeService.fit(records).slope <= 4.3
        for r in records:
            assert r.inverted_separation == pytest.approx(r.separation, abs=1e-11)

    def test_exact_power_mode(self, config):
        fit = SlopeService.fit(SlopeService.amplitudes(config, exact_power=4.0))
        assert fit.slope == pytest.approx(4.0, abs=1e-9)

    def test_workers_keep_order(self, config):
        serial = SlopeService.amplitudes(config, workers=1)
        parallel = SlopeService.amplitudes(config, workers=4)
        assert serial == parallel

    def test_single_separation(self):
        records = SlopeService.amplitudes(RunConfig(separations=[2.21e-7]))
        with pytest.raises(UnderdeterminedFitError):
            SlopeService.fit(records)


class TestCalibrationService:
    def test_synthesized_sweep_round_trip(self, config):
        samples = CalibrationService.synthesize(config, 1e-6)
        assert len(samples) == 11
        result = CalibrationService.calibrate(samples, config, 1e-6)
        assert result.spring_constant == pytest.approx(0.138, rel=1e-9)
        assert result.residual_potential == pytest.approx(-0.135, rel=1e-9)

    def test_smooth_bending_calibration(self):
        config = RunConfig(calibration=CalibrationConfig(spring_constant=0.0052))
        samples = CalibrationService.synthesize(config, 1e-6, smooth=True)
        result = CalibrationService.calibrate(samples, config, 1e-6, smooth=True)
        assert result.spring_constant == pytest.approx(0.0052, rel=1e-9)

    def test_geometry_at_configured_phase(self, config):
        pair = CalibrationService.geometry(config, 2.21e-7, smooth=False)
        assert pair.phase == 0.0 and pair.amplitude_plate == config.amplitude_plate
        assert CalibrationService.geometry(config, 2.21e-7, smooth=True).amplitude_plate == 0.0

    def test_isolation_pairs_fit_with_reported_constant(self):
        torsional = CalibrationResult(spring_constant=0.138, residual_potential=-0.135, fit_residual=0.0, n_samples=11)
        isolation = CalibrationService.isolation(torsional)
        assert isolation.bending_spring_constant == 0.0052
        assert isolation.ratio == pytest.approx(26.54, rel=1e-3)
        assert isolation.isolated

        bending = CalibrationResult(spring_constant=0.0052, residual_potential=-0.135, fit_residual=0.0, n_samples=11)
        assert CalibrationService.isolation(bending, smooth=True).ratio == pytest.approx(26.54, rel=1e-3)

    def test_soft_torsion_is_not_isolated(self):
        soft = CalibrationResult(spring_constant=0.02, residual_potential=-0.135, fit_residual=0.0, n_samples=11)
        isolation = CalibrationService.isolation(soft)
        assert isolation.ratio == pytest.approx(0.02 / 0.0052)
        assert not isolation.isolated


class TestReportService:
    def test_report_is_reproducible(self, config, tmp_path):
        report = ReportService.new_report("slope", config)
        report.power_law = SlopeService.fit(SlopeService.amplitudes(config))
        first = ReportService.write_json(report, tmp_path / "a.json").read_bytes()
        second = ReportService.write_json(report, tmp_path / "b.json").read_bytes()
        assert first == second
        data = json.loads(first)
        assert data["command"] == "slope"
        assert data["config"]["separations"] == config.separations
        assert math.isfinite(data["power_law"]["slope"])
