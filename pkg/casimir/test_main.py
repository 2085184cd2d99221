import csv
import json

import pytest

from exceptions import EXIT_FIT, EXIT_OK, EXIT_VALIDATION
from io_formats import read_record_csv, read_scan_csv
from main import build_parser, main

SHORT_SCAN = "scan.step = 1.2e-8\nscan.n_steps = 200\nscan.n_scans = 4\n"


@pytest.fixture
def write_config(tmp_path):
    def _write(text):
        path = tmp_path / "run.conf"
        path.write_text(text)
        return str(path)
    return _write


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["slope", "--workers", "3", "--seed", "5", "--lambda-p", "0"])
        assert args.command == "slope" and args.workers == 3 and args.seed == 5 and args.lambda_p == 0.0

    def test_unknown_subcommand_exits_with_usage_error(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["wobble"])
        assert exc_info.value.code == 2


class TestForceCurveCommand:
    def test_default_curve(self, tmp_path):
        assert main(["force-curve", "--out", str(tmp_path), "--svg"]) == EXIT_OK
        rows = read_rows(tmp_path / "force_curve.csv")
        assert rows[0] == ["z_m", "f_lateral_n", "bracket_factor", "beta", "flags"]
        assert len(rows) == 52
        assert (tmp_path / "force_curve.svg").read_text().startswith("<svg")
        assert json.loads((tmp_path / "report.json").read_text())["command"] == "force-curve"

    def test_row_at_closest_separation(self, tmp_path):
        main(["force-curve", "--out", str(tmp_path), "--z-min", "2.21e-7", "--z-max", "2.21e-7", "--z-points", "1"])
        row = read_rows(tmp_path / "force_curve.csv")[1]
        assert float(row[0]) == 2.21e-7
        assert float(row[1]) == pytest.approx(3.2e-13, rel=0.05)

    def test_aligned_phase_gives_zero_column(self, tmp_path):
        main(["force-curve", "--out", str(tmp_path), "--phase", "0"])
        assert all(float(row[1]) == 0.0 for row in read_rows(tmp_path / "force_curve.csv")[1:])

    def test_empty_range_writes_header_only(self, tmp_path):
        assert main(["force-curve", "--out", str(tmp_path), "--z-points", "0"]) == EXIT_OK
        assert (tmp_path / "force_curve.csv").read_text() == "z_m,f_lateral_n,bracket_factor,beta,flags\n"

    def test_phase_sweep(self, tmp_path):
        assert main(["force-curve", "--out", str(tmp_path), "--phase-sweep", "--z", "2.33e-7"]) == EXIT_OK
        rows = read_rows(tmp_path / "phase_curve.csv")
        assert rows[0][0] == "phi_rad"
        assert len(rows) == 74

    def test_lambda_override_changes_bracket(self, tmp_path):
        main(["force-curve", "--out", str(tmp_path), "--lambda-p", "0"])
        assert all(float(row[2]) == 1.0 for row in read_rows(tmp_path / "force_curve.csv")[1:])


class TestLateralScanCommand:
    def test_same_seed_same_bytes(self, tmp_path, write_config):
        config = write_config(SHORT_SCAN)
        assert main(["lateral-scan", "--config", config, "--out", str(tmp_path / "a"), "--seed", "9"]) == EXIT_OK
        assert main(["lateral-scan", "--config", config, "--out", str(tmp_path / "b"), "--seed", "9"]) == EXIT_OK
        for name in ("lateral_scan.csv", "lateral_fit.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_noiseless_fit(self, tmp_path, write_config):
        config = write_config(SHORT_SCAN + "scan.noise_sigma = 0\n")
        assert main(["lateral-scan", "--config", config, "--out", str(tmp_path), "--z", "2.21e-7", "--svg"]) == EXIT_OK
        fit = read_record_csv(tmp_path / "lateral_fit.csv")
        assert fit["amplitude_n"] == pytest.approx(3.2e-13, rel=0.02)
        assert fit["inverted_z_m"] == pytest.approx(2.21e-7, abs=2e-9)
        assert fit["sigma_mean_n"] == pytest.approx(0.0, abs=1e-25)
        assert fit["systematic_n"] == pytest.approx(0.05 * fit["amplitude_n"], rel=1e-9)
        assert fit["student_t"] == 2.0
        assert fit["delta_total_n"] == pytest.approx(fit["systematic_n"], rel=1e-6, abs=1e-25)
        assert read_scan_csv(tmp_path / "lateral_scan.csv").n_scans == 4
        assert "<polyline" in (tmp_path / "lateral_scan.svg").read_text()


class TestSlopeCommand:
    def test_default_slope(self, tmp_path):
        assert main(["slope", "--out", str(tmp_path), "--svg"]) == EXIT_OK
        fit = read_record_csv(tmp_path / "power_law.csv")
        assert 3.9 <= fit["slope"] <= 4.3
        assert len(read_rows(tmp_path / "slope.csv")) == 5
        report = json.loads((tmp_path / "report.json").read_text())
        assert len(report["separations"]) == 4

    def test_exact_power(self, tmp_path):
        main(["slope", "--out", str(tmp_path), "--exact-power", "4"])
        assert read_record_csv(tmp_path / "power_law.csv")["slope"] == pytest.approx(4.0, abs=1e-9)

    def test_single_separation_is_fit_error(self, tmp_path, write_config):
        config = write_config("separations = 2.21e-7\n")
        assert main(["slope", "--config", config, "--out", str(tmp_path)]) == EXIT_FIT


class TestCalibrateCommand:
    def test_synthesized_round_trip(self, tmp_path):
        sweep = tmp_path / "sweep.csv"
        assert main(["calibrate", "--out", str(tmp_path), "--synthesize", str(sweep)]) == EXIT_OK
        assert sweep.read_text().startswith("v1_volts,deflection\n")
        result = read_record_csv(tmp_path / "calibration.csv")
        assert result["spring_constant_n_per_m"] == pytest.approx(0.138, rel=1e-9)
        assert result["residual_potential_v"] == pytest.approx(-0.135, rel=1e-9)
        assert result["spring_constant_ratio"] == pytest.approx(0.138 / 0.0052, rel=1e-9)
        assert result["lateral_isolation_ok"] == 1
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["isolation"]["isolated"] is True

    def test_reads_existing_sweep(self, tmp_path):
        sweep = tmp_path / "sweep.csv"
        main(["calibrate", "--out", str(tmp_path / "first"), "--synthesize", str(sweep), "--smooth"])
        assert main(["calibrate", str(sweep), "--out", str(tmp_path), "--smooth"]) == EXIT_OK
        assert read_record_csv(tmp_path / "calibration.csv")["n_samples"] == 11

    def test_two_rows_is_fit_error(self, tmp_path):
        sweep = tmp_path / "sweep.csv"
        sweep.write_text("v1_volts,deflection\n0.1,-1e-9\n0.2,-2e-9\n")
        assert main(["calibrate", str(sweep), "--out", str(tmp_path)]) == EXIT_FIT

    def test_non_numeric_cell_is_parse_error(self, tmp_path, capsys):
        sweep = tmp_path / "sweep.csv"
        sweep.write_text("v1_volts,deflection\n0.1,-1e-9\nzero,-2e-9\n")
        assert main(["calibrate", str(sweep), "--out", str(tmp_path)]) == EXIT_VALIDATION
        err = capsys.readouterr().err
        assert "line 3" in err and "v1_volts" in err

    def test_missing_input(self, tmp_path):
        assert main(["calibrate", "--out", str(tmp_path)]) == EXIT_VALIDATION


class TestConfigErrors:
    def test_invalid_config_lists_violations(self, tmp_path, write_config, capsys):
        config = write_config("period = -1\nsphere_radius = 0\n")
        assert main(["force-curve", "--config", config, "--out", str(tmp_path)]) == EXIT_VALIDATION
        err = capsys.readouterr().err
        assert "period" in err and "sphere_radius" in err

    def test_negative_lambda_override(self, tmp_path):
        assert main(["force-curve", "--out", str(tmp_path), "--lambda-p", "-1"]) == EXIT_VALIDATION

    def test_log_dir(self, tmp_path):
        assert main(["force-curve", "--out", str(tmp_path), "--z-points", "2", "--log-dir", str(tmp_path / "logs")]) == EXIT_OK
        assert (tmp_path / "logs" / "casimir.log").exists()


@pytest.mark.slow
class TestVerifyCommand:
    def test_default_config_passes(self, tmp_path):
        assert main(["verify", "--out", str(tmp_path), "--pdf"]) == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert all(check["status"] != "fail" for check in report["checks"])
        assert (tmp_path / "report.pdf").read_bytes().startswith(b"%PDF")

    def test_ideal_metal_skips(self, tmp_path):
        assert main(["verify", "--out", str(tmp_path), "--lambda-p", "0"]) == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        skipped = [c for c in report["checks"] if c["status"] == "skip"]
        assert skipped and all(c["detail"].startswith("skipped") for c in skipped)
