"""Particle-marginal Metropolis-Hastings over positive parameters.

The chain moves in log-parameter space with a Gaussian random walk and
accepts with the usual Metropolis ratio, where the intractable marginal
likelihood of each proposal is replaced by the particle-filter estimate
(computed once per proposal and reused while the proposal is retained —
re-estimating the retained value would break the exactness of the
pseudo-marginal construction). Each accepted parameter also gets a
state trajectory drawn from the same filter run, so the chain samples
parameters and state paths jointly.

The proposal starts as an independent random walk scaled to a fraction
of each prior's log-scale SD, and after a warmup period switches to the
classic adaptive form: the empirical covariance of the whole log-chain
history scaled by 2.38^2 / d, plus a small diagonal jitter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FilterCollapseError, InferenceStartupError, IntegrationError
from .smc import bootstrap_filter, draw_trajectory

_FILTER_TAG = 104729  # arbitrary fixed salts so the streams never collide
_CHAIN_TAG = 1299709
_INIT_TAG = 15485863
_THIN_TAG = 7919


def substream(seed, *tags) -> np.random.Generator:
    """Independent generator deterministically derived from (seed, tags)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


@dataclass
class PmmhConfig:
    n_particles: int = 500
    n_iterations: int = 50_000
    warmup: int = 5_000
    seed: int = 0
    proposal_scale: float = 0.1  # of each prior log-SD, before adaptation
    adapt_epsilon: float = 1e-8
    traj_thin: int = 0  # store a trajectory every k iterations post-warmup; 0 = never
    traj_draw: str = "fresh"  # "fresh" or "retained", see pmmh()
    max_init_retries: int = 20
    resampler: str = "multinomial"


@dataclass
class TrajectoryDraw:
    iteration: int
    theta: np.ndarray
    path: np.ndarray  # (n_steps + 1, state_dim)


@dataclass
class PmmhResult:
    names: tuple
    thetas: np.ndarray  # (n_iterations, d), retained value after each iteration
    log_evidences: np.ndarray  # (n_iterations,)
    accepted: np.ndarray  # (n_iterations,) bool
    acceptance_rate: float
    draws: list = field(default_factory=list)  # TrajectoryDraw, thinned
    n_init_attempts: int = 1


def log_accept_ratio(ln_z_new, log_prior_new, log_jacobian_new,
                     ln_z_old, log_prior_old, log_jacobian_old):
    """Log Metropolis ratio for the log-space random walk.

    The proposal is symmetric in log space, so the ratio is the
    difference of (evidence + prior + Jacobian) terms; a proposal whose
    terms all equal the current ones is accepted with probability 1.
    """
    return ((ln_z_new + log_prior_new + log_jacobian_new)
            - (ln_z_old + log_prior_old + log_jacobian_old))


def adapt_proposal(log_theta_history, iteration, base_cov, warmup, epsilon=1e-8):
    """Proposal covariance for the given iteration.

    During warmup (or with fewer than two history points) this is the
    fixed `base_cov`; afterwards it is (2.38^2 / d) times the sample
    covariance of the log-parameter history plus epsilon * I.
    """
    history = np.atleast_2d(np.asarray(log_theta_history, dtype=float))
    d = base_cov.shape[0]
    if iteration < warmup or history.shape[0] < 2:
        return base_cov
    emp = np.cov(history, rowvar=False, ddof=1).reshape(d, d)
    return (2.38 ** 2 / d) * emp + epsilon * np.eye(d)


class _RunningMoments:
    """Streaming mean and sample covariance of the log-parameter chain."""

    def __init__(self, dim):
        self.n = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    def push(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self._m2 += np.outer(delta, x - self.mean)

    def cov(self):
        return self._m2 / (self.n - 1)


def _estimate_evidence(model, theta, observations, config, n_steps, it):
    """Filter run for one proposal; collapse counts as -inf evidence."""
    rng = substream(config.seed, _FILTER_TAG, it)
    try:
        ens = bootstrap_filter(model, theta, observations, config.n_particles,
                               rng, n_steps=n_steps, resampler=config.resampler)
    except (FilterCollapseError, IntegrationError):
        return -np.inf, None, rng
    if not np.isfinite(ens.log_evidence):
        return -np.inf, None, rng
    return ens.log_evidence, ens, rng


def pmmh(model, prior, observations, config: PmmhConfig, n_steps=None,
         init_theta=None, on_iteration=None) -> PmmhResult:
    """Sample the parameter (and state-path) posterior.

    Parameters
    ----------
    model : state-space model (see `ssm`)
    prior : object exposing sample(rng), log_density(theta), log_sds(),
        and names (the `priors.PriorSpec` interface)
    observations : [(t, payload)] as consumed by `bootstrap_filter`
    config : PmmhConfig
    n_steps : transitions per filter run (default: last observation time)
    init_theta : starting parameter vector; drawn from the prior if omitted

    Trajectory storage (config.traj_thin > 0) keeps one state path every
    traj_thin iterations after warmup. With traj_draw="fresh" (default)
    each stored path is drawn from a fresh filter run at the currently
    retained parameters, giving conditionally independent smoothing
    draws even while the parameter chain lingers; "retained" stores the
    path drawn when the current parameters were accepted, i.e. the exact
    joint-chain state, at the price of duplicated paths across sticky
    stretches.

    Raises
    ------
    InferenceStartupError
        If no finite initial evidence is found within
        config.max_init_retries prior draws.
    """
    if config.n_iterations < 1:
        raise InferenceStartupError("n_iterations must be >= 1")
    if config.traj_draw not in ("fresh", "retained"):
        raise InferenceStartupError(f"unknown traj_draw {config.traj_draw!r}")
    names = tuple(prior.names)
    d = len(names)
    chain_rng = substream(config.seed, _CHAIN_TAG)
    init_rng = substream(config.seed, _INIT_TAG)

    theta = None
    attempts = 0
    while True:
        attempts += 1
        cand = np.asarray(init_theta, dtype=float) if init_theta is not None \
            else prior.sample(init_rng)
        lp = prior.log_density(cand)
        if np.isfinite(lp):
            ln_z, ens, filt_rng = _estimate_evidence(
                model, cand, observations, config, n_steps, 0)
            if np.isfinite(ln_z):
                theta = cand
                break
        if init_theta is not None or attempts >= config.max_init_retries:
            raise InferenceStartupError(
                f"no finite initial evidence after {attempts} attempt(s)")
    log_theta = np.log(theta)
    log_prior = prior.log_density(theta)
    retained_path = draw_trajectory(ens, filt_rng) if config.traj_thin > 0 else None

    base_cov = np.diag((config.proposal_scale * np.asarray(prior.log_sds())) ** 2)
    moments = _RunningMoments(d)

    thetas = np.empty((config.n_iterations, d))
    log_evidences = np.empty(config.n_iterations)
    accepted = np.zeros(config.n_iterations, dtype=bool)
    draws = []

    for it in range(config.n_iterations):
        if it < config.warmup or moments.n < 2:
            cov = base_cov
        else:
            cov = (2.38 ** 2 / d) * moments.cov() + config.adapt_epsilon * np.eye(d)
        chol = np.linalg.cholesky(cov)
        prop_log = log_theta + chol @ chain_rng.standard_normal(d)
        prop = np.exp(prop_log)
        prop_prior = prior.log_density(prop)
        if np.isfinite(prop_prior):
            prop_ln_z, prop_ens, filt_rng = _estimate_evidence(
                model, prop, observations, config, n_steps, it + 1)
            # The walk is on log(theta), so the target density picks up
            # the Jacobian sum(log theta).
            log_ratio = log_accept_ratio(prop_ln_z, prop_prior, prop_log.sum(),
                                         ln_z, log_prior, log_theta.sum())
            if np.log(chain_rng.random()) < log_ratio:
                theta, log_theta = prop, prop_log
                log_prior, ln_z = prop_prior, prop_ln_z
                accepted[it] = True
                if config.traj_thin > 0:
                    retained_path = draw_trajectory(prop_ens, filt_rng)
        moments.push(log_theta)
        thetas[it] = theta
        log_evidences[it] = ln_z
        if (config.traj_thin > 0 and it >= config.warmup
                and (it - config.warmup) % config.traj_thin == 0):
            path = retained_path
            if config.traj_draw == "fresh":
                thin_rng = substream(config.seed, _THIN_TAG, it)
                try:
                    thin_ens = bootstrap_filter(model, theta, observations,
                                                config.n_particles, thin_rng,
                                                n_steps=n_steps,
                                                resampler=config.resampler)
                    path = draw_trajectory(thin_ens, thin_rng)
                except (FilterCollapseError, IntegrationError):
                    pass  # keep the retained path for this point
            draws.append(TrajectoryDraw(iteration=it, theta=theta.copy(),
                                        path=path.copy()))
        if on_iteration is not None:
            on_iteration(it, bool(accepted[it]), float(ln_z), theta)

    return PmmhResult(names=names, thetas=thetas, log_evidences=log_evidences,
                      accepted=accepted,
                      acceptance_rate=float(accepted.mean()),
                      draws=draws, n_init_attempts=attempts)
