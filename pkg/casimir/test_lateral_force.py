import math
from unittest.mock import patch

import numpy as np
import pytest

from constants import C1, C2, C3, C4
from exceptions import DomainError, GeometryError, NumericalError
from lateral_force import (
    corrugated_energy,
    lateral_amplitude,
    lateral_coefficients,
    lateral_force_array,
    lateral_force_closed,
    lateral_force_numeric,
    lateral_phase_curve,
    normal_force_pft,
    periodic_mean,
    sphere_plate_energy,
)
from energy import plate_energy
from schemas import CorrugationProfile, Material, SphereGeometry, ValidityFlag

NM = 1e-9
GOLD = Material(plasma_wavelength=136 * NM)
IDEAL = Material(plasma_wavelength=0.0)


@pytest.fixture
def profile():
    return CorrugationProfile(period=1.2e-6, amplitude_plate=59 * NM, amplitude_sphere=8 * NM)


@pytest.fixture
def sphere():
    return SphereGeometry(radius=1e-4)


class TestPeriodicMean:
    def test_constant_and_cosine(self):
        assert periodic_mean(lambda t: np.full_like(t, 2.5)) == pytest.approx(2.5)
        assert periodic_mean(lambda t: 1 + np.cos(t)) == pytest.approx(1.0, rel=1e-14)

    def test_analytic_mean(self):
        # mean of 1/(z + b cos t) is 1/sqrt(z² − b²)
        z, b = 2.0, 1.5
        assert periodic_mean(lambda t: 1 / (z + b * np.cos(t))) == pytest.approx(1 / math.sqrt(z * z - b * b), rel=1e-12)

    def test_non_convergence_reports_diagnostics(self):
        rng = np.random.default_rng(0)
        with pytest.raises(NumericalError) as exc_info:
            periodic_mean(lambda t: rng.normal(size=t.shape), nodes=8, max_nodes=64)
        assert exc_info.value.diagnostics["nodes"] == 64


class TestCorrugatedEnergy:
    def test_flat_surfaces_reduce_to_plate_energy(self, sphere):
        flat = CorrugationProfile(period=1e-6, amplitude_plate=0.0, amplitude_sphere=0.0).place(2e-7)
        assert corrugated_energy(flat, GOLD) == pytest.approx(plate_energy(2e-7, GOLD), rel=1e-12)
        assert normal_force_pft(flat, sphere, GOLD) == pytest.approx(
            2 * math.pi * 1e-4 * plate_energy(2e-7, GOLD), rel=1e-12)

    def test_corrugation_strengthens_attraction(self, profile, sphere):
        pair = profile.place(221 * NM, math.pi)
        assert corrugated_energy(pair, GOLD) < plate_energy(221 * NM, GOLD)

    def test_normal_force_is_minus_energy_derivative(self, profile, sphere):
        pair = profile.place(233 * NM, 1.0)
        h = 233 * NM * 1e-4
        derivative = (sphere_plate_energy(pair.with_separation(233 * NM + h), sphere, GOLD)
                      - sphere_plate_energy(pair.with_separation(233 * NM - h), sphere, GOLD)) / (2 * h)
        assert -derivative == pytest.approx(normal_force_pft(pair, sphere, GOLD), rel=1e-6)


class TestLateralCoefficients:
    def test_flat_limit(self):
        c1x, c2x, c3x, c4x = lateral_coefficients(0.0)
        assert c1x == pytest.approx(4 / 3 * C1)
        assert c2x == pytest.approx(5 / 3 * C2)
        assert c3x == pytest.approx(2 * C3)
        assert c4x == pytest.approx(7 / 3 * C4)

    @pytest.mark.parametrize("beta", [-0.1, 1.0, 1.5])
    def test_domain(self, beta):
        with pytest.raises(DomainError):
            lateral_coefficients(beta)


class TestLateralForceClosed:
    """Closed-form lateral force at the measured configuration"""

    def test_amplitude_at_closest_separation(self, profile, sphere):
        result = lateral_force_closed(profile.place(221 * NM, math.pi / 2), sphere, GOLD)
        assert result.force == pytest.approx(3.2e-13, rel=0.05)
        assert result.force == pytest.approx(3.222e-13, rel=2e-3)

    def test_amplitude_at_second_separation(self, profile, sphere):
        result = lateral_force_closed(profile.place(233 * NM, math.pi / 2), sphere, GOLD)
        assert result.force == pytest.approx(2.6e-13, rel=0.05)

    def test_zero_at_aligned_and_opposite_phase(self, profile, sphere):
        assert lateral_force_closed(profile.place(221 * NM, 0.0), sphere, GOLD).force == 0.0
        assert abs(lateral_force_closed(profile.place(221 * NM, math.pi), sphere, GOLD).force) < 1e-27

    def test_odd_and_periodic(self, profile, sphere):
        for phi in (0.3, 1.2, 2.9):
            f = lateral_force_closed(profile.place(245 * NM, phi), sphere, GOLD).force
            assert lateral_force_closed(profile.place(245 * NM, -phi), sphere, GOLD).force == pytest.approx(-f, rel=1e-12)
            assert lateral_force_closed(profile.place(245 * NM, phi + 2 * math.pi), sphere, GOLD).force == pytest.approx(f, rel=1e-12)

    def test_ideal_bracket_is_one(self, profile, sphere):
        result = lateral_force_closed(profile.place(221 * NM, 1.0), sphere, IDEAL)
        assert result.bracket_factor == 1.0
        assert result.force == result.ideal_force

    def test_conductivity_reduces_force(self, profile, sphere):
        pair = profile.place(221 * NM, math.pi / 2)
        assert 0 < lateral_force_closed(pair, sphere, GOLD).bracket_factor < 1

    def test_validity_flags(self, profile, sphere):
        result = lateral_force_closed(profile.place(100 * NM, 1.0), sphere, GOLD)
        assert ValidityFlag.BELOW_PLASMA_WAVELENGTH in result.validity_flags
        assert result.pft_accuracy == pytest.approx(0.002)

        small = lateral_force_closed(profile.place(221 * NM, 1.0), SphereGeometry(radius=5e-6), GOLD)
        assert ValidityFlag.PFT_MARGINAL in small.validity_flags

        long_gap = lateral_force_closed(profile.place(1.5e-6, 1.0), sphere, GOLD)
        assert ValidityFlag.ADDITIVE_MARGINAL in long_gap.validity_flags

    def test_array_reports_touching_index(self, profile, sphere):
        z = np.array([221 * NM, 200 * NM, 60 * NM])
        with pytest.raises(GeometryError) as exc_info:
            lateral_force_array(profile, z, math.pi, sphere, GOLD)
        assert exc_info.value.step == 2

    def test_phase_curve_matches_pointwise(self, profile, sphere):
        phases = np.linspace(0, 2 * math.pi, 13)
        curve = lateral_phase_curve(profile, 233 * NM, phases, sphere, GOLD)
        pointwise = [lateral_force_closed(profile.place(233 * NM, p), sphere, GOLD).force for p in phases]
        np.testing.assert_allclose(curve, pointwise, rtol=1e-12, atol=1e-30)

    def test_phase_curve_reduces_whole_turns(self, profile, sphere):
        phases = np.array([2 * math.pi, 4 * math.pi, -2 * math.pi, -math.pi / 2, 5 * math.pi / 2])
        curve = lateral_phase_curve(profile, 233 * NM, phases, sphere, GOLD)
        pointwise = [lateral_force_closed(profile.place(233 * NM, p), sphere, GOLD).force for p in phases]
        assert list(curve[:3]) == [0.0, 0.0, 0.0]
        np.testing.assert_allclose(curve, pointwise, rtol=1e-12, atol=0.0)

    def test_non_positive_gap_is_contact(self, profile, sphere):
        z = np.array([221 * NM, 100 * NM, -5 * NM, 0.0])
        with pytest.raises(GeometryError) as exc_info:
            lateral_force_array(profile, z, 1.0, sphere, GOLD)
        assert exc_info.value.step == 2

    def test_non_finite_separation(self, profile, sphere):
        with pytest.raises(DomainError):
            lateral_force_array(profile, np.array([221 * NM, math.inf]), 1.0, sphere, GOLD)


class TestLateralForceOracle:
    """Quadrature oracle against the closed form"""

    @pytest.mark.parametrize("material", [IDEAL, GOLD])
    @pytest.mark.parametrize("z", [221 * NM, 257 * NM, 300 * NM])
    def test_matches_closed_form(self, profile, sphere, material, z):
        for phi in (math.pi / 4, math.pi / 2, 2.5):
            pair = profile.place(z, phi)
            closed = lateral_force_closed(pair, sphere, material).force
            assert lateral_force_numeric(pair, sphere, material) == pytest.approx(closed, rel=1e-4)

    def test_corrupted_coefficient_is_detected(self, profile, sphere):
        pair = profile.place(221 * NM, math.pi / 2)
        numeric = lateral_force_numeric(pair, sphere, GOLD)
        with patch("lateral_force.conductivity_coefficients", return_value=(C1, C2, 2 * C3, C4)):
            corrupted = lateral_force_closed(pair, sphere, GOLD).force
        assert abs(corrupted - numeric) / abs(numeric) > 1e-2

    def test_explicit_coefficients_override(self, profile, sphere):
        pair = profile.place(221 * NM, math.pi / 2)
        default = lateral_force_closed(pair, sphere, GOLD).force
        same = lateral_force_closed(pair, sphere, GOLD, coefficients=(C1, C2, C3, C4)).force
        assert same == default


class TestLateralAmplitude:
    def test_maximum_near_quarter_phase(self, profile, sphere):
        amplitude, phi = lateral_amplitude(profile, 221 * NM, sphere, GOLD)
        at_quarter = lateral_force_closed(profile.place(221 * NM, math.pi / 2), sphere, GOLD).force
        assert amplitude >= at_quarter
        assert amplitude == pytest.approx(at_quarter, rel=5e-3)
        assert math.pi / 2 < phi < math.pi

    def test_shallow_corrugation_peaks_at_quarter_phase(self, sphere):
        shallow = CorrugationProfile(period=1.2e-6, amplitude_plate=1 * NM, amplitude_sphere=1 * NM)
        _, phi = lateral_amplitude(shallow, 500 * NM, sphere, GOLD)
        assert phi == pytest.approx(math.pi / 2, abs=1e-2)

    def test_zero_when_one_surface_is_flat(self, sphere):
        flat_sphere = CorrugationProfile(period=1.2e-6, amplitude_plate=59 * NM, amplitude_sphere=0.0)
        assert lateral_amplitude(flat_sphere, 221 * NM, sphere, GOLD) == (0.0, math.pi / 2)

    def test_decreases_with_separation(self, profile, sphere):
        amplitudes = [lateral_amplitude(profile, z, sphere, GOLD)[0] for z in (221 * NM, 233 * NM, 245 * NM)]
        assert amplitudes[0] > amplitudes[1] > amplitudes[2]

    def test_contact_rejected(self, profile, sphere):
        with pytest.raises(GeometryError):
            lateral_amplitude(profile, 60 * NM, sphere, GOLD)
