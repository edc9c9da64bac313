"""Bootstrap particle filter with lineage tracking.

Particles are propagated through the model transition, reweighted by
the observation likelihood wherever there is data, and resampled after
every weighting step. The running product of mean weights (accumulated
in log space) is an unbiased estimate of the marginal likelihood of the
observations. Ancestor indices are recorded so that a single weighted
lineage — a smoothed state-path sample — can be drawn afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FilterCollapseError

RESAMPLERS = ("multinomial", "systematic")


def _normalized_weights(log_weights):
    log_weights = np.asarray(log_weights, dtype=float)
    m = np.max(log_weights)
    if not np.isfinite(m):
        raise DomainError("all log-weights are -inf")
    w = np.exp(log_weights - m)
    return w / w.sum()


def resample_multinomial(log_weights, rng: np.random.Generator):
    """Ancestor indices: independent categorical draws, prob ~ exp(log_weights)."""
    probs = _normalized_weights(log_weights)
    edges = np.cumsum(probs)
    u = rng.random(len(probs))
    return np.minimum(np.searchsorted(edges, u, side="right"),
                      len(probs) - 1).astype(np.int64)


def resample_systematic(log_weights, rng: np.random.Generator):
    """Ancestor indices from a single uniform offset on a regular grid."""
    probs = _normalized_weights(log_weights)
    edges = np.cumsum(probs)
    n = len(probs)
    u = (np.arange(n) + rng.random()) / n
    return np.minimum(np.searchsorted(edges, u, side="right"), n - 1).astype(np.int64)


_RESAMPLE_FN = {"multinomial": resample_multinomial,
                "systematic": resample_systematic}


@dataclass
class ParticleEnsemble:
    """Filter output: weighted trajectories plus the evidence estimate.

    history[t]   : particle states at time t (pre-resampling), t = 0..n_steps
    ancestors[t] : index into history[t-1] of each particle's parent
    final_log_weights : unnormalized log-weights at the last step (zeros
                        if the last step carried no observations)
    step_log_evidence : per-observation-time increments; their sum is
                        log_evidence
    """

    n_steps: int
    history: np.ndarray
    ancestors: np.ndarray
    final_log_weights: np.ndarray
    log_evidence: float
    step_log_evidence: dict


def bootstrap_filter(model, theta, observations, n_particles,
                     rng: np.random.Generator, n_steps=None,
                     resampler="multinomial") -> ParticleEnsemble:
    """Run the filter and return the ensemble with its evidence estimate.

    Parameters
    ----------
    model : state-space model (see `ssm`)
    theta : 1-D parameter vector handed through to the model
    observations : sequence of (t, payload), strictly increasing t >= 1;
        payload is whatever the model's obs_loglik expects at one time
    n_particles : ensemble size
    n_steps : number of transitions; defaults to the last observation time
    """
    if n_particles < 1:
        raise DomainError("n_particles must be >= 1")
    if resampler not in _RESAMPLE_FN:
        raise DomainError(f"unknown resampler {resampler!r}")
    resample = _RESAMPLE_FN[resampler]
    observations = list(observations)
    times = [t for t, _ in observations]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise DomainError("observation times must be strictly increasing")
    if times and times[0] < 1:
        raise DomainError("observations start at t=1; time 0 is the initial state")
    if n_steps is None:
        n_steps = times[-1] if times else 0
    if times and times[-1] > n_steps:
        raise DomainError("observations extend past n_steps")
    obs_at = dict(observations)

    particles = np.asarray(model.initial_particles(theta, n_particles, rng), dtype=float)
    dim = particles.shape[1]
    history = np.empty((n_steps + 1, n_particles, dim))
    ancestors = np.empty((n_steps + 1, n_particles), dtype=np.int64)
    history[0] = particles
    ancestors[0] = np.arange(n_particles)

    identity = np.arange(n_particles)
    log_w = None  # None means uniform weights
    log_evidence = 0.0
    step_log_evidence = {}
    for t in range(1, n_steps + 1):
        if log_w is not None:
            idx = resample(log_w, rng)
            particles = particles[idx]
            ancestors[t] = idx
            log_w = None
        else:
            ancestors[t] = identity
        particles = np.asarray(model.transition(particles, theta, t, rng), dtype=float)
        history[t] = particles
        obs = obs_at.get(t)
        if obs is not None:
            ll = np.asarray(model.obs_loglik(obs, particles, theta), dtype=float)
            ll = np.where(np.isnan(ll), -np.inf, ll)
            m = np.max(ll)
            if not np.isfinite(m):
                raise FilterCollapseError(t)
            inc = m + np.log(np.mean(np.exp(ll - m)))
            log_evidence += inc
            step_log_evidence[t] = float(inc)
            log_w = ll

    final = log_w if log_w is not None else np.zeros(n_particles)
    return ParticleEnsemble(n_steps=n_steps, history=history, ancestors=ancestors,
                            final_log_weights=np.asarray(final, dtype=float),
                            log_evidence=float(log_evidence),
                            step_log_evidence=step_log_evidence)


def draw_trajectory(ensemble: ParticleEnsemble, rng: np.random.Generator) -> np.ndarray:
    """One lineage sampled proportionally to the final weights.

    Returns the (n_steps + 1, state_dim) path of a single ancestral
    trajectory; repeated calls give independent draws from the weighted
    trajectory ensemble.
    """
    probs = _normalized_weights(ensemble.final_log_weights)
    edges = np.cumsum(probs)
    j = min(int(np.searchsorted(edges, rng.random(), side="right")), len(probs) - 1)
    path = np.empty((ensemble.n_steps + 1, ensemble.history.shape[2]))
    for t in range(ensemble.n_steps, -1, -1):
        path[t] = ensemble.history[t, j]
        j = int(ensemble.ancestors[t, j])
    return path
