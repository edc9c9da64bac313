"""Tests for resampling, the bootstrap filter and trajectory draws."""

import numpy as np
import pytest

from npzdfilter import (DomainError, FilterCollapseError, LinearGaussianSSM,
                        ParticleEnsemble, bootstrap_filter, draw_trajectory,
                        kalman_loglik, resample_multinomial,
                        resample_systematic)


class TestResampleMultinomial:
    def test_point_mass(self, rng):
        lw = np.full(20, -np.inf)
        lw[7] = 0.0
        assert np.all(resample_multinomial(lw, rng) == 7)

    def test_uniform_frequencies(self, rng):
        n = 100_000
        idx = resample_multinomial(np.zeros(n), rng)
        # Bin the ancestors into deciles; each holds n/10 in expectation.
        counts = np.bincount(idx // (n // 10), minlength=10)
        p = 0.1
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 4.0 * sigma)

    def test_expected_offspring_proportional_to_weight(self, rng):
        lw = np.log(np.array([0.5, 0.25, 0.15, 0.1]))
        reps = 10_000
        counts = np.zeros(4)
        for _ in range(reps):
            counts += np.bincount(resample_multinomial(lw, rng), minlength=4)
        expected = 4 * reps * np.exp(lw)
        sigma = np.sqrt(4 * reps * np.exp(lw) * (1 - np.exp(lw)))
        assert np.all(np.abs(counts - expected) < 4.0 * sigma)

    def test_offsets_do_not_matter(self, rng):
        lw = rng.normal(size=50)
        rng_a = np.random.default_rng(11)
        rng_b = np.random.default_rng(11)
        a = resample_multinomial(lw, rng_a)
        b = resample_multinomial(lw - 1e6, rng_b)
        assert np.array_equal(a, b)

    def test_all_neg_inf_rejected(self, rng):
        with pytest.raises(DomainError):
            resample_multinomial(np.full(10, -np.inf), rng)


class TestResampleSystematic:
    def test_point_mass(self, rng):
        lw = np.full(20, -np.inf)
        lw[3] = 0.0
        assert np.all(resample_systematic(lw, rng) == 3)

    def test_equal_weights_preserve_everything(self, rng):
        idx = resample_systematic(np.zeros(64), rng)
        assert np.array_equal(np.sort(idx), np.arange(64))


class TestBootstrapFilter:
    def test_no_observations_gives_zero_evidence(self, rng):
        model = LinearGaussianSSM()
        res = bootstrap_filter(model, None, [], 50, rng, n_steps=20)
        assert res.log_evidence == 0.0
        assert res.history.shape == (21, 50, 1)

    def test_single_particle_evidence_is_path_loglik(self, rng):
        model = LinearGaussianSSM()
        _, ys = model.simulate(15, rng)
        res = bootstrap_filter(model, None, ys, 1, rng)
        path = res.history[:, 0, :]
        manual = sum(model.obs_loglik(y, path[t:t + 1], None)[0]
                     for t, y in ys)
        assert res.log_evidence == pytest.approx(manual, rel=1e-12)

    def test_evidence_against_kalman(self, rng):
        model = LinearGaussianSSM(a=0.9, q=1.0, r=1.0)
        _, ys = model.simulate(30, rng)
        exact = kalman_loglik(ys, model.a, model.q, model.r, model.m0, model.p0)
        reps = np.array([
            bootstrap_filter(model, None, ys, 2000,
                             np.random.default_rng(100 + k)).log_evidence
            for k in range(30)])
        se = reps.std(ddof=1) / np.sqrt(len(reps))
        assert abs(reps.mean() - exact) < 3.0 * se
        # The estimator is biased low in expectation of the log, slightly.
        assert reps.std(ddof=1) < 1.0

    def test_collapse_raises_with_time(self, rng):
        class Doomed(LinearGaussianSSM):
            def obs_loglik(self, obs, particles, theta):
                return np.full(len(particles), -np.inf)

        model = Doomed()
        _, ys = model.simulate(5, rng)
        with pytest.raises(FilterCollapseError) as err:
            bootstrap_filter(model, None, ys, 10, rng)
        assert err.value.t == 1

    def test_extreme_negative_loglik_is_safe(self, rng):
        class Shifted(LinearGaussianSSM):
            def obs_loglik(self, obs, particles, theta):
                return super().obs_loglik(obs, particles, theta) - 1e6

        model = Shifted()
        _, ys = model.simulate(10, rng)
        res = bootstrap_filter(model, None, ys, 100, rng)
        assert np.isfinite(res.log_evidence)
        assert res.log_evidence == pytest.approx(-1e7, rel=1e-3)

    def test_observation_validation(self, rng):
        model = LinearGaussianSSM()
        with pytest.raises(DomainError):
            bootstrap_filter(model, None, [(0, 1.0)], 10, rng)
        with pytest.raises(DomainError):
            bootstrap_filter(model, None, [(2, 1.0), (2, 1.0)], 10, rng)
        with pytest.raises(DomainError):
            bootstrap_filter(model, None, [(5, 1.0)], 10, rng, n_steps=3)

    def test_determinism(self, rng):
        model = LinearGaussianSSM()
        _, ys = model.simulate(12, rng)
        a = bootstrap_filter(model, None, ys, 64, np.random.default_rng(5))
        b = bootstrap_filter(model, None, ys, 64, np.random.default_rng(5))
        assert a.log_evidence == b.log_evidence
        assert np.array_equal(a.history, b.history)
        assert np.array_equal(a.ancestors, b.ancestors)

    def test_resampling_preserves_expectations(self, rng):
        # Weighted mean before resampling equals the unweighted mean after,
        # averaged over many replicates.
        values = rng.normal(size=30)
        lw = rng.normal(size=30)
        w = np.exp(lw - lw.max())
        w /= w.sum()
        target = float(w @ values)
        means = [values[resample_multinomial(lw, rng)].mean()
                 for _ in range(10_000)]
        se = np.std(means, ddof=1) / np.sqrt(len(means))
        assert abs(np.mean(means) - target) < 4.0 * se


class TestDrawTrajectory:
    def _hand_built(self):
        # Three steps, two particles. Ancestry: particle 1 at t=3 descends
        # from slot 0 at t=2, slot 1 at t=1, slot 1 at t=0.
        history = np.arange(8, dtype=float).reshape(4, 2, 1)
        ancestors = np.array([[0, 1], [0, 1], [1, 1], [1, 0]])
        final = np.array([-np.inf, 0.0])
        return ParticleEnsemble(n_steps=3, history=history, ancestors=ancestors,
                                final_log_weights=final, log_evidence=0.0,
                                step_log_evidence={})

    def test_point_mass_lineage(self, rng):
        ens = self._hand_built()
        path = draw_trajectory(ens, rng)
        # slot 1 at t=3 -> ancestor 0 at t=2 -> ancestor 1 at t=1 -> slot 1 at t=0,
        # i.e. history values 7 <- 4 <- 3 <- 1.
        assert path[:, 0].tolist() == [1.0, 3.0, 4.0, 7.0]

    def test_single_particle(self, rng):
        model = LinearGaussianSSM()
        _, ys = model.simulate(6, rng)
        res = bootstrap_filter(model, None, ys, 1, rng)
        path = draw_trajectory(res, rng)
        assert np.array_equal(path, res.history[:, 0, :])

    def test_final_state_distribution(self, rng):
        history = np.zeros((1, 4, 1))
        history[0, :, 0] = np.arange(4)
        ens = ParticleEnsemble(
            n_steps=0, history=history,
            ancestors=np.arange(4).reshape(1, 4),
            final_log_weights=np.log(np.array([0.4, 0.3, 0.2, 0.1])),
            log_evidence=0.0, step_log_evidence={})
        draws = np.array([draw_trajectory(ens, rng)[0, 0] for _ in range(10_000)])
        counts = np.bincount(draws.astype(int), minlength=4)
        expected = 10_000 * np.array([0.4, 0.3, 0.2, 0.1])
        sigma = np.sqrt(expected * (1 - expected / 10_000))
        assert np.all(np.abs(counts - expected) < 4.0 * sigma)

    def test_lineages_are_consistent_paths(self, rng):
        # Every drawn path must consist of states that actually occur in
        # the history at the right times.
        model = LinearGaussianSSM()
        _, ys = model.simulate(10, rng)
        res = bootstrap_filter(model, None, ys, 32, rng)
        for _ in range(20):
            path = draw_trajectory(res, rng)
            for t in range(res.n_steps + 1):
                assert path[t] in res.history[t]


class TestEvidenceVariance:
    def test_sd_decreases_with_particles(self, rng):
        model = LinearGaussianSSM()
        _, ys = model.simulate(25, rng)
        sds = []
        for n in (25, 100, 400):
            reps = [bootstrap_filter(model, None, ys, n,
                                     np.random.default_rng(1000 + k)).log_evidence
                    for k in range(40)]
            sds.append(np.std(reps, ddof=1))
        assert sds[0] > sds[1] > sds[2]
