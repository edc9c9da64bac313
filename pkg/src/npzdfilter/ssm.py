"""State-space model contract used by the filtering and sampling code.

A model exposes three operations, all vectorized across particles:

* ``initial_particles(theta, n, rng)`` draws the time-0 ensemble,
  shape ``(n, state_dim)``.
* ``transition(particles, theta, t, rng)`` advances every particle from
  time ``t - 1`` to ``t`` by sampling the transition kernel. Only
  samples are ever required; the transition density is never evaluated.
* ``obs_loglik(obs, particles, theta)`` returns the per-particle joint
  log-likelihood of whatever was observed at one time.

``theta`` is an opaque 1-D parameter vector interpreted by the model.
The linear-Gaussian model below implements the contract in closed form,
and its exact Kalman evidence makes it the reference point for testing
the particle machinery.
"""

from __future__ import annotations

import math

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


class LinearGaussianSSM:
    """Scalar AR(1) state observed in Gaussian noise.

        x_t = a x_{t-1} + N(0, q^2),   y_t = x_t + N(0, r^2)

    with x_0 ~ N(m0, p0). When `p0` is omitted it is set to the
    stationary variance q^2 / (1 - a^2) of the construction-time
    parameters and then held fixed, also under inference.

    `infer` may name one of "a", "q", "r"; that parameter is then read
    from theta[0] while the others stay at their constructor values.
    """

    state_dim = 1

    def __init__(self, a=0.9, q=1.0, r=1.0, m0=0.0, p0=None, infer=None):
        if infer not in (None, "a", "q", "r"):
            raise ValueError(f"cannot infer {infer!r}")
        if p0 is None:
            if not abs(a) < 1:
                raise ValueError("stationary initialization needs |a| < 1")
            p0 = q * q / (1.0 - a * a)
        self.a, self.q, self.r = float(a), float(q), float(r)
        self.m0, self.p0 = float(m0), float(p0)
        self.infer = infer

    def params(self, theta):
        a, q, r = self.a, self.q, self.r
        if self.infer is not None:
            value = float(np.asarray(theta).reshape(-1)[0])
            a, q, r = {"a": (value, q, r), "q": (a, value, r),
                       "r": (a, q, value)}[self.infer]
        return a, q, r

    def initial_particles(self, theta, n, rng: np.random.Generator):
        return self.m0 + math.sqrt(self.p0) * rng.standard_normal((n, 1))

    def transition(self, particles, theta, t, rng: np.random.Generator):
        a, q, _ = self.params(theta)
        return a * particles + q * rng.standard_normal(particles.shape)

    def obs_loglik(self, obs, particles, theta):
        _, _, r = self.params(theta)
        z = (float(obs) - particles[:, 0]) / r
        return -math.log(r) - 0.5 * _LOG_2PI - 0.5 * z * z

    def simulate(self, n_steps, rng: np.random.Generator, theta=None):
        """One state path and its observations.

        Returns (xs, observations): xs has shape (n_steps + 1,) with the
        initial state first; observations is the [(t, y_t)] list the
        filter consumes, for t = 1..n_steps.
        """
        a, q, r = self.params(theta)
        xs = np.empty(n_steps + 1)
        xs[0] = self.m0 + math.sqrt(self.p0) * rng.standard_normal()
        ys = []
        for t in range(1, n_steps + 1):
            xs[t] = a * xs[t - 1] + q * rng.standard_normal()
            ys.append((t, xs[t] + r * rng.standard_normal()))
        return xs, ys


def kalman_loglik(observations, a, q, r, m0, p0):
    """Exact log marginal likelihood of [(t, y_t)] under the model above.

    Observation times must be the consecutive integers 1..T; this is the
    closed-form value the particle filter estimates.
    """
    mean, var = m0, p0
    total = 0.0
    expected_t = 1
    for t, y in observations:
        if t != expected_t:
            raise ValueError("kalman_loglik requires consecutive observation times")
        expected_t += 1
        mean = a * mean
        var = a * a * var + q * q
        s = var + r * r
        resid = y - mean
        total += -0.5 * (_LOG_2PI + math.log(s) + resid * resid / s)
        gain = var / s
        mean = mean + gain * resid
        var = (1.0 - gain) * var
    return total
