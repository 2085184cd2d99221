import math

import numpy as np
import pytest
from pydantic import ValidationError

from geometry import effective_amplitude, effective_params, profile_lower, profile_upper, reduce_phases, separation
from schemas import CorrugationPair, CorrugationProfile

NM = 1e-9


@pytest.fixture
def profile():
    return CorrugationProfile(period=1.2e-6, amplitude_plate=59 * NM, amplitude_sphere=8 * NM)


class TestProfiles:
    def test_lower_profile(self, profile):
        pair = profile.place(221 * NM)
        assert profile_lower(0.0, pair) == 0.0
        assert profile_lower(pair.period / 4, pair) == pytest.approx(59 * NM)
        assert profile_lower(pair.period + 1e-7, pair) == pytest.approx(profile_lower(1e-7, pair), abs=1e-20)

    def test_upper_profile(self, profile):
        assert profile_upper(0.0, profile.place(221 * NM, 0.0)) == pytest.approx(221 * NM)
        assert profile_upper(0.0, profile.place(221 * NM, math.pi / 2)) == pytest.approx(229 * NM)

    def test_profiles_vectorised(self, profile):
        x = np.linspace(0, 1.2e-6, 7)
        assert profile_lower(x, profile.place(221 * NM)).shape == (7,)


class TestEffectiveCorrugation:
    """Reduction of the two corrugations to a single cosine"""

    def test_in_phase(self, profile):
        assert effective_params(profile.place(221 * NM, 0.0)).b == pytest.approx(51 * NM)

    def test_opposite_phase(self, profile):
        eff = effective_params(profile.place(221 * NM, math.pi))
        assert eff.b == pytest.approx(67 * NM)
        assert eff.beta == pytest.approx(0.303, abs=1e-3)

    def test_quarter_phase(self, profile):
        assert effective_params(profile.place(221 * NM, math.pi / 2)).b == pytest.approx(math.sqrt(3545) * NM)

    def test_b_is_even_and_bounded(self):
        phases = np.linspace(-3 * math.pi, 3 * math.pi, 101)
        b, _ = effective_amplitude(59 * NM, 8 * NM, phases)
        b_neg, _ = effective_amplitude(59 * NM, 8 * NM, -phases)
        np.testing.assert_allclose(b, b_neg, rtol=1e-14)
        assert np.all(b >= 51 * NM * (1 - 1e-12)) and np.all(b <= 67 * NM * (1 + 1e-12))

    def test_alpha_branch(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a1, a2 = rng.uniform(0, 8e-8, 2)
            phi = rng.uniform(-2 * math.pi, 2 * math.pi)
            b, alpha = effective_amplitude(a1, a2, phi)
            scale = 1e-12 * (a1 + a2)
            assert abs(b * math.cos(alpha) - a2 * math.sin(phi)) < scale
            assert abs(b * math.sin(alpha) - (a2 * math.cos(phi) - a1)) < scale

    def test_degenerate_alpha_is_zero(self):
        b, alpha = effective_amplitude(5e-8, 5e-8, 0.0)
        assert b == 0.0 and alpha == 0.0


class TestSeparation:
    def test_matches_profile_difference(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            a1, a2 = rng.uniform(0, 8e-8, 2)
            z = a1 + a2 + rng.uniform(1e-9, 3e-7)
            pair = CorrugationPair(period=1.2e-6, amplitude_plate=a1, amplitude_sphere=a2,
                                   phase=rng.uniform(0, 2 * math.pi), mean_separation=z)
            x = rng.uniform(0, pair.period)
            direct = profile_upper(x, pair) - profile_lower(x, pair)
            assert abs(separation(x, pair) - direct) < 1e-12 * z

    def test_identical_corrugations_cancel(self):
        pair = CorrugationPair(period=1e-6, amplitude_plate=3e-8, amplitude_sphere=3e-8,
                               phase=0.0, mean_separation=2e-7)
        np.testing.assert_allclose(separation(np.linspace(0, 1e-6, 50), pair), 2e-7, rtol=1e-15)

    def test_mean_over_period(self, profile):
        pair = profile.place(221 * NM, 1.1)
        x = np.linspace(0, pair.period, 256, endpoint=False)
        assert np.mean(separation(x, pair)) == pytest.approx(221 * NM, rel=1e-12)
        assert np.all(separation(x, pair) > 0)

    def test_touching_surfaces_rejected(self, profile):
        with pytest.raises(ValidationError):
            profile.place(67 * NM, math.pi)


class TestReducePhases:
    def test_matches_pair_validator(self, profile):
        phases = [0.0, 2 * math.pi, -2 * math.pi, 7.0, -0.5, 1e3, -1e-17]
        expected = [profile.place(221 * NM, p).phase for p in phases]
        assert reduce_phases(phases).tolist() == expected

    def test_range(self):
        reduced = reduce_phases(np.linspace(-20, 20, 401))
        assert np.all((reduced >= 0) & (reduced < 2 * math.pi))
