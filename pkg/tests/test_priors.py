"""Tests for the parameter priors: table values, sampling, densities."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from npzdfilter import (DomainError, PriorEntry, PriorSpec, THETA_NAMES,
                        ThetaSample, default_priors, shipped_priors_text)

LOG_ZERO = float("-inf")


class TestDefaultTable:
    def test_size_and_order(self):
        spec = default_priors()
        assert len(spec) == 15
        assert spec.names == THETA_NAMES

    def test_growth_rate_row(self):
        e = default_priors().entry("mu_gmax")
        assert (e.mean, e.sigma, e.family) == (1.2, 0.63, "lognormal")

    def test_sinking_rate_is_gaussian(self):
        e = default_priors().entry("s_d")
        assert (e.mean, e.sigma, e.family) == (5.0, 1.0, "normal")

    def test_diversity_factor_row(self):
        e = default_priors().entry("zdf")
        assert (e.mean, e.sigma, e.family) == (0.15, 0.4, "lognormal")

    def test_shipped_json_byte_match(self):
        assert default_priors().to_json_text() == shipped_priors_text()

    def test_json_roundtrip(self):
        spec = default_priors()
        again = PriorSpec.from_json_text(spec.to_json_text())
        assert again.names == spec.names
        assert again.convention == spec.convention
        for a, b in zip(spec.entries, again.entries):
            assert a == b


class TestSampling:
    def test_tiny_sigma_concentrates_on_mean(self, rng):
        e = PriorEntry(name="x", family="lognormal", mean=0.7, sigma=1e-9)
        assert e.sample(rng) == pytest.approx(0.7, rel=1e-6)

    def test_natural_mean_convention(self, rng):
        e = default_priors().entry("mu_gmax")
        draws = e.sample_n(rng, 100_000)
        assert draws.mean() == pytest.approx(1.2, rel=0.02)

    def test_sinking_rate_truncation(self, rng):
        e = PriorEntry(name="s_d", family="normal", mean=0.5, sigma=1.0)
        draws = e.sample_n(rng, 100_000)
        assert np.all(draws > 0.0)

    def test_median_convention(self, rng):
        spec = default_priors(convention="median")
        e = spec.entry("mu_clz")
        draws = e.sample_n(rng, 200_000, convention="median")
        assert np.median(draws) == pytest.approx(0.2, rel=0.02)

    def test_full_vector_shape(self, rng):
        theta = default_priors().sample(rng)
        assert theta.shape == (15,)
        assert np.all(theta > 0.0)


class TestLogDensity:
    def test_normalization_by_quadrature(self):
        spec = default_priors()
        for name in ("mu_gmax", "mu_clz", "s_d", "f_d"):
            e = spec.entry(name)
            total, err = quad(lambda x: math.exp(e.log_density(x)), 0.0, np.inf,
                              limit=200)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_lognormal_mode(self):
        e = default_priors().entry("mu_clz")
        xs = np.linspace(1e-4, 1.0, 200_001)
        dens = np.array([e.log_density(x) for x in xs])
        mode = xs[np.argmax(dens)]
        expected = math.exp(e.log_mean() - e.sigma ** 2)
        assert mode == pytest.approx(expected, rel=1e-3)

    def test_outside_support_is_log_zero(self):
        spec = default_priors()
        theta = spec.mean_values()
        theta[spec.index("f_d")] = -0.1
        assert spec.log_density(theta) == LOG_ZERO

    def test_joint_is_sum_of_components(self, rng):
        spec = default_priors()
        theta = spec.sample(rng)
        total = sum(e.log_density(x) for e, x in zip(spec.entries, theta))
        assert spec.log_density(theta) == pytest.approx(total, rel=1e-14)

    def test_histogram_matches_density(self, rng):
        # Sampling / density consistency on a 50-bin grid, per component:
        # counts vs the exact bin masses obtained by quadrature.
        spec = default_priors()
        for name in ("mu_gmax", "s_d", "pdf"):
            e = spec.entry(name)
            draws = e.sample_n(rng, 1_000_000)
            lo, hi = np.quantile(draws, [0.001, 0.999])
            counts, edges = np.histogram(draws, bins=50, range=(lo, hi))
            expected = np.array([
                quad(lambda x: math.exp(e.log_density(x)), a, b)[0]
                for a, b in zip(edges[:-1], edges[1:])]) * len(draws)
            sigma = np.sqrt(np.maximum(expected, 1.0))
            assert np.all(np.abs(counts - expected) < 5.0 * sigma)


class TestMoments:
    def test_mean_values_match_table(self):
        spec = default_priors()
        means = spec.mean_values()
        for name, expected in (("mu_gmax", 1.2), ("mu_rd", 0.1), ("k_w", 0.03)):
            assert means[spec.index(name)] == pytest.approx(expected, rel=1e-12)

    def test_truncated_normal_mean_shift(self):
        # Truncating N(5, 1) at zero moves the mean by under 1e-5.
        e = default_priors().entry("s_d")
        assert e.expected_value() == pytest.approx(5.0, abs=1e-5)
        assert e.expected_value() > 5.0

    def test_lognormal_sd(self):
        e = default_priors().entry("mu_clz")
        expected = 0.2 * math.sqrt(math.expm1(1.3 ** 2))
        assert e.sd_value() == pytest.approx(expected, rel=1e-12)

    def test_log_sds(self):
        spec = default_priors()
        sds = spec.log_sds()
        assert sds[spec.index("mu_clz")] == pytest.approx(1.3)
        assert sds[spec.index("s_d")] == pytest.approx(0.2)


class TestThetaSample:
    def test_roundtrip(self, rng):
        theta = default_priors().sample(rng)
        ts = ThetaSample.from_array(theta)
        assert np.array_equal(ts.as_array(), theta)
        assert ts.mu_gmax == theta[THETA_NAMES.index("mu_gmax")]

    def test_wrong_length_rejected(self):
        with pytest.raises(DomainError):
            ThetaSample.from_array(np.ones(7))


class TestValidation:
    def test_unknown_family(self):
        with pytest.raises(DomainError):
            PriorEntry(name="x", family="cauchy", mean=1.0, sigma=1.0)

    def test_nonpositive_mean(self):
        with pytest.raises(DomainError):
            PriorEntry(name="x", family="lognormal", mean=0.0, sigma=1.0)

    def test_duplicate_names(self):
        e = PriorEntry(name="x", family="lognormal", mean=1.0, sigma=1.0)
        with pytest.raises(DomainError):
            PriorSpec([e, e])
