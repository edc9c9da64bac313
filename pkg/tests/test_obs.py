"""Tests for the lognormal observation model and its file format."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from npzdfilter import (DataError, DomainError, ObsNoise, Observation,
                        cv_to_sigma_log, load_observations, obs_loglik,
                        save_observations, sigma_log_to_cv, station_noise,
                        synth_observations)
from npzdfilter.obs import daily_schedule, group_by_day, lognormal_loglik


class TestCvConversion:
    def test_station_value(self):
        assert cv_to_sigma_log(0.5) == pytest.approx(math.sqrt(math.log(1.25)))
        assert cv_to_sigma_log(0.5) == pytest.approx(0.4724, abs=5e-5)

    def test_small_cv_limit(self):
        for cv in (1e-3, 1e-5):
            assert cv_to_sigma_log(cv) / cv == pytest.approx(1.0, abs=1e-5)

    def test_roundtrip(self, rng):
        for cv in rng.uniform(0.01, 2.0, 50):
            assert sigma_log_to_cv(cv_to_sigma_log(cv)) == pytest.approx(cv, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            cv_to_sigma_log(0.0)


class TestSynthObservations:
    def make_truth(self, n_days):
        states = np.tile([14.0, 4.0, 3.0, 1.5], (n_days, 1))
        chla = np.full(n_days, 0.6)
        return states, chla

    def test_vanishing_noise_recovers_truth(self, rng):
        states, chla = self.make_truth(4)
        noise = ObsNoise({v: 1e-12 for v in ("din", "p", "z", "d", "chla")})
        obs = synth_observations(states, chla, noise, daily_schedule([1, 2, 3]), rng)
        for o in obs:
            expected = 0.6 if o.variable == "chla" else \
                {"din": 14.0, "p": 4.0, "z": 3.0, "d": 1.5}[o.variable]
            assert o.value == pytest.approx(expected, rel=1e-9)

    def test_all_positive(self, rng):
        states, chla = self.make_truth(50)
        noise = ObsNoise()
        obs = synth_observations(states, chla, noise,
                                 daily_schedule(range(1, 50)), rng)
        assert len(obs) == 49 * 5
        assert all(o.value > 0 for o in obs)

    def test_log_error_spread(self, rng):
        n = 100_001
        states, chla = self.make_truth(n)
        noise = ObsNoise()
        schedule = [(d, "p") for d in range(1, n)]
        obs = synth_observations(states, chla, noise, schedule, rng)
        spread = np.std(np.log([o.value / 4.0 for o in obs]), ddof=1)
        assert spread == pytest.approx(0.2, rel=0.02)

    def test_bad_day_rejected(self, rng):
        states, chla = self.make_truth(4)
        with pytest.raises(DataError):
            synth_observations(states, chla, ObsNoise(), [(9, "p")], rng)


class TestObsLoglik:
    def test_no_observations(self):
        assert obs_loglik([], np.array([1.0, 1.0, 1.0, 1.0]), 0.5, ObsNoise()) == 0.0

    def test_peak_value(self):
        v, sigma = 3.7, 0.2
        obs = [Observation(day=1, variable="din", value=v)]
        state = np.array([v, 1.0, 1.0, 1.0])
        expected = -math.log(v * sigma * math.sqrt(2 * math.pi))
        assert obs_loglik(obs, state, 0.5, ObsNoise({"din": sigma})) == \
            pytest.approx(expected, rel=1e-12)

    def test_wider_noise_lowers_peak(self):
        obs = [Observation(day=1, variable="p", value=4.0)]
        state = np.array([1.0, 4.0, 1.0, 1.0])
        tight = obs_loglik(obs, state, 0.5, ObsNoise({"p": 0.2}))
        wide = obs_loglik(obs, state, 0.5, ObsNoise({"p": 0.4}))
        assert wide < tight

    def test_normalization_by_quadrature(self, rng):
        for model_value in (0.3, 2.0, 17.0):
            total, _ = quad(lambda y: math.exp(
                lognormal_loglik(y, model_value, 0.25)), 0.0, np.inf, limit=200)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_order_invariance(self, rng):
        state = np.array([14.0, 4.0, 3.0, 1.5])
        obs = [Observation(day=2, variable=v, value=x)
               for v, x in (("din", 15.0), ("p", 3.3), ("chla", 0.8))]
        noise = ObsNoise()
        forward = obs_loglik(obs, state, 0.6, noise)
        backward = obs_loglik(list(reversed(obs)), state, 0.6, noise)
        assert forward == pytest.approx(backward, rel=1e-14)

    def test_floor_prevents_log_zero(self):
        obs = [Observation(day=1, variable="p", value=1.0)]
        state = np.array([1.0, 0.0, 1.0, 1.0])
        value = obs_loglik(obs, state, 0.5, ObsNoise())
        assert np.isfinite(value)

    def test_chla_compares_against_diagnostic(self):
        obs = [Observation(day=1, variable="chla", value=0.5)]
        noise = ObsNoise()
        state = np.array([1.0, 100.0, 1.0, 1.0])  # P should be ignored
        at_diag = obs_loglik(obs, state, 0.5, noise)
        peak = -math.log(0.5 * noise.sigma("chla") * math.sqrt(2 * math.pi))
        assert at_diag == pytest.approx(peak, rel=1e-12)

    def test_truth_beats_scaled_truth(self, rng):
        # Average likelihood at the truth exceeds that at twice the truth.
        truth = 3.0
        sigma = 0.2
        noise = ObsNoise({"p": sigma})
        state_true = np.array([1.0, truth, 1.0, 1.0])
        state_wrong = np.array([1.0, 2 * truth, 1.0, 1.0])
        diffs = []
        for _ in range(1000):
            y = truth * math.exp(sigma * rng.standard_normal())
            o = [Observation(day=1, variable="p", value=y)]
            diffs.append(obs_loglik(o, state_true, 0.5, noise)
                         - obs_loglik(o, state_wrong, 0.5, noise))
        assert np.mean(diffs) > 0.0


class TestStationNoise:
    def test_default_station_preset(self):
        noise = station_noise()
        assert set(noise.sigma_log) == {"din", "chla"}
        assert noise.sigma("din") == pytest.approx(cv_to_sigma_log(0.5))


class TestFiles:
    def test_roundtrip(self, tmp_path, rng):
        obs = [Observation(day=3, variable="din", value=15.234),
               Observation(day=5, variable="chla", value=0.412)]
        path = tmp_path / "obs.csv"
        save_observations(obs, path)
        again = load_observations(path)
        assert again == obs

    def test_bad_header(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("time,var,val\n1,din,2.0\n")
        with pytest.raises(DataError):
            load_observations(path)

    def test_bad_value_reports_line(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("day,variable,value\n1,din,2.0\n2,din,-3.0\n")
        with pytest.raises(DataError, match="obs.csv:3"):
            load_observations(path)

    def test_group_by_day(self):
        obs = [Observation(day=3, variable="din", value=1.0),
               Observation(day=3, variable="p", value=1.0),
               Observation(day=7, variable="z", value=2.0)]
        grouped = group_by_day(obs)
        assert sorted(grouped) == [3, 7]
        assert len(grouped[3]) == 2


class TestObservationType:
    def test_rejects_unknown_variable(self):
        with pytest.raises(DomainError):
            Observation(day=1, variable="oxygen", value=1.0)

    def test_rejects_nonpositive_value(self):
        with pytest.raises(DomainError):
            Observation(day=1, variable="din", value=0.0)
