"""Tests for the lognormal-innovation AR processes and their moments."""

import math

import numpy as np
import pytest

from npzdfilter import (ArSpec, DomainError, InnovationParams, ar_step,
                        init_stationary, innovation_params, stationary_moments)
from npzdfilter.ar import simulate_path


class TestInnovationParams:
    def test_single_species_unit_time_collapses(self):
        spec = ArSpec(mu_lphi=0.3, sigma_lphi=0.7, tau=1.0, df=1.0)
        innov = innovation_params(spec)
        assert innov.sigma_z == pytest.approx(0.7, rel=1e-14)
        assert innov.mu_z == pytest.approx(0.3, rel=1e-14)

    def test_deterministic_limit(self):
        spec = ArSpec(mu_lphi=-0.4, sigma_lphi=0.0, tau=5.0, df=0.3)
        innov = innovation_params(spec)
        assert innov.sigma_z == 0.0
        assert innov.mu_z == -0.4

    def test_hand_evaluated(self):
        spec = ArSpec(mu_lphi=math.log(1.2) - 0.63 ** 2 / 2, sigma_lphi=0.63,
                      tau=10.0, df=0.2)
        innov = innovation_params(spec)
        sigma_z2 = math.log(1 + 19.0 * 0.04 * math.expm1(0.63 ** 2))
        assert innov.sigma_z == pytest.approx(math.sqrt(sigma_z2), rel=1e-12)
        assert innov.sigma_z == pytest.approx(0.561, abs=5e-4)

    def test_tau_bound(self):
        with pytest.raises(DomainError):
            ArSpec(mu_lphi=0.0, sigma_lphi=0.5, tau=0.5, df=1.0)

    def test_df_bound(self):
        with pytest.raises(DomainError):
            ArSpec(mu_lphi=0.0, sigma_lphi=0.5, tau=2.0, df=1.5)


class TestArStep:
    def test_fixed_point_without_noise(self):
        innov = InnovationParams(mu_z=0.2, sigma_z=0.0)
        b = math.exp(0.2)
        assert ar_step(b, innov, tau=7.0, noise=1.3) == pytest.approx(b, rel=1e-14)

    def test_frozen_for_large_tau(self):
        innov = InnovationParams(mu_z=0.0, sigma_z=0.5)
        b1 = ar_step(2.0, innov, tau=1e12, noise=0.7)
        assert b1 == pytest.approx(2.0, rel=1e-10)

    def test_positivity(self, rng):
        spec = ArSpec(mu_lphi=0.0, sigma_lphi=1.0, tau=1.0, df=1.0)
        innov = innovation_params(spec)
        b = 1.0
        for noise in rng.standard_normal(2000):
            b = ar_step(b, innov, spec.tau, noise)
            assert b > 0.0

    def test_long_run_mean(self, rng):
        spec = ArSpec(mu_lphi=0.1, sigma_lphi=0.5, tau=4.0, df=0.5)
        path = simulate_path(spec, 10 ** 6, rng)
        mean, _ = stationary_moments(spec)
        assert path.mean() == pytest.approx(mean, rel=0.02)


class TestStationaryMoments:
    def test_deterministic_cv(self):
        spec = ArSpec(mu_lphi=0.3, sigma_lphi=0.0, tau=3.0, df=0.5)
        _, cv = stationary_moments(spec)
        assert cv == 0.0

    def test_cv_formulas_agree(self, rng):
        for _ in range(200):
            spec = ArSpec(mu_lphi=rng.normal(), sigma_lphi=rng.uniform(0.05, 1.3),
                          tau=rng.uniform(0.6, 40.0), df=rng.uniform(0.05, 1.0))
            _, cv = stationary_moments(spec)
            innov = innovation_params(spec)
            via_innov = math.sqrt(math.expm1(innov.sigma_z ** 2) / (2 * spec.tau - 1))
            assert cv == pytest.approx(via_innov, rel=1e-12)

    def test_closed_form_value(self):
        spec = ArSpec(mu_lphi=math.log(1.2) - 0.63 ** 2 / 2, sigma_lphi=0.63,
                      tau=10.0, df=0.2)
        mean, cv = stationary_moments(spec)
        assert mean == pytest.approx(1.2, rel=1e-12)
        assert cv == pytest.approx(0.2 * math.sqrt(math.expm1(0.63 ** 2)), rel=1e-12)

    def test_moment_roundtrip_through_innovations(self, rng):
        # E and CV recomputed from (mu_z, sigma_z) must reproduce the spec's
        # implied stationary moments.
        for _ in range(100):
            spec = ArSpec(mu_lphi=rng.normal(), sigma_lphi=rng.uniform(0.0, 1.3),
                          tau=rng.uniform(1.0, 50.0), df=rng.uniform(0.05, 1.0))
            innov = innovation_params(spec)
            mean, cv = stationary_moments(spec)
            mean_b = math.exp(innov.mu_z + innov.sigma_z ** 2 / 2)
            cv_b = math.sqrt(math.expm1(innov.sigma_z ** 2) / (2 * spec.tau - 1))
            assert mean_b == pytest.approx(mean, rel=1e-12)
            assert cv_b == pytest.approx(cv, rel=1e-12)


class TestInitStationary:
    def test_deterministic_spec(self, rng):
        spec = ArSpec(mu_lphi=-0.7, sigma_lphi=0.0, tau=3.0, df=0.5)
        assert init_stationary(spec, rng) == pytest.approx(math.exp(-0.7), rel=1e-12)

    def test_matches_stationary_moments(self, rng):
        spec = ArSpec(mu_lphi=0.2, sigma_lphi=0.63, tau=10.0, df=0.2)
        draws = init_stationary(spec, rng, size=100_000)
        mean, cv = stationary_moments(spec)
        assert draws.mean() == pytest.approx(mean, rel=0.01)
        assert draws.std(ddof=1) / draws.mean() == pytest.approx(cv, rel=0.05)


class TestPathStatistics:
    def test_moments_and_autocorrelation(self, rng):
        spec = ArSpec(mu_lphi=math.log(0.2), sigma_lphi=0.7, tau=10.0, df=0.5)
        path = simulate_path(spec, 10 ** 6, rng)
        mean, cv = stationary_moments(spec)
        assert path.mean() == pytest.approx(mean, rel=0.02)
        assert path.std(ddof=1) / path.mean() == pytest.approx(cv, rel=0.05)
        centered = path - path.mean()
        rho1 = (centered[:-1] * centered[1:]).mean() / centered.var()
        assert abs(rho1 - (1.0 - 1.0 / spec.tau)) < 0.02
