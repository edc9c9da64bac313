"""Experiment orchestration: ensembles, twins, inference and forecasts.

Every run writes a self-contained output directory: the resolved
configuration, the forcing actually used, CSV chain/trajectory/quantile
products. Float columns are written with shortest-roundtrip formatting,
so re-reading a file recovers bit-identical values and repeated runs
with one seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, DataError, DomainError
from .forcing import ForcingSeries, load_forcing, synth_climatology
from .npzd_ssm import PACKED_COLUMNS, NpzdSsm
from .obs import (ObsNoise, daily_schedule, group_by_day, load_observations,
                  save_observations, sparse_station_schedule, synth_observations)
from .pmmh import PmmhConfig, PmmhResult, pmmh, substream
from .priors import THETA_NAMES, PriorSpec, default_priors

QUANTILE_PROBS = (0.025, 0.5, 0.975)

# Parameters tied to the community processes; the twin truth shifts these.
THETA_B_NAMES = ("pdf", "zdf", "mu_gmax", "mu_rn", "mu_lambdamax", "mu_an",
                 "mu_iz", "mu_clz", "mu_ez", "mu_mq", "mu_rd")

# Sign of each community parameter's displacement in the twin truth. A
# uniform upward shift strengthens grazing enough to crash phytoplankton
# over winter, while uniformly weakening it produces violent bloom
# cycles; this pattern (strong growth, weak clearance, strong ingestion
# and mortality, steadier communities) was selected by exhaustive search
# as the displacement that keeps the trajectory in the grazing-
# controlled high-nutrient low-chlorophyll regime.
TRUTH_SHIFT_SIGNS = {"pdf": -1.0, "zdf": -1.0, "mu_gmax": +1.0, "mu_rn": -1.0,
                     "mu_lambdamax": +1.0, "mu_an": -1.0, "mu_iz": +1.0,
                     "mu_clz": -1.0, "mu_ez": +1.0, "mu_mq": +1.0,
                     "mu_rd": +1.0}

# Stream tags (see pmmh.substream) for the independent RNG lanes.
_TAG_ENS_THETA = 11
_TAG_ENS_SIM = 12
_TAG_TRUTH = 21
_TAG_OBS = 22
_TAG_SCHEDULE = 23
_TAG_FORECAST = 31


def _fmt(x) -> str:
    return repr(float(x))


def summarize(values, probs=QUANTILE_PROBS) -> np.ndarray:
    """Linear-interpolation empirical quantiles along the first axis."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("cannot summarize an empty sample")
    return np.quantile(values, probs, axis=0, method="linear")


@dataclass(frozen=True)
class QuantileSummary:
    """Per day and variable: 2.5%, 50% and 97.5% ensemble quantiles."""

    days: np.ndarray  # (n_days,) absolute day indices
    variables: tuple
    q025: np.ndarray  # (n_days, n_variables)
    q500: np.ndarray
    q975: np.ndarray

    def __post_init__(self):
        shape = (len(self.days), len(self.variables))
        for name in ("q025", "q500", "q975"):
            if getattr(self, name).shape != shape:
                raise DataError("quantile arrays and day/variable axes disagree")
        if np.any(self.q025 > self.q500) or np.any(self.q500 > self.q975):
            raise DataError("quantile ordering violated")

    @classmethod
    def from_paths(cls, paths, days, variables=PACKED_COLUMNS) -> "QuantileSummary":
        """Summarize an ensemble of trajectories, shape (n_members, n_days, n_vars)."""
        q = summarize(paths)
        return cls(days=np.asarray(days, dtype=int), variables=tuple(variables),
                   q025=q[0], q500=q[1], q975=q[2])

    def column(self, variable, which="q500") -> np.ndarray:
        return getattr(self, which)[:, self.variables.index(variable)]

    def band_width(self, variable) -> np.ndarray:
        j = self.variables.index(variable)
        return self.q975[:, j] - self.q025[:, j]

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["day", "variable", "q025", "q500", "q975"])
            for i, day in enumerate(self.days):
                for j, var in enumerate(self.variables):
                    writer.writerow([int(day), var, _fmt(self.q025[i, j]),
                                     _fmt(self.q500[i, j]), _fmt(self.q975[i, j])])

    @classmethod
    def from_csv(cls, path) -> "QuantileSummary":
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["day", "variable", "q025", "q500", "q975"]:
                raise DataError(f"{path}: not a quantile summary file")
            for row in reader:
                if row:
                    rows.append((int(row[0]), row[1], float(row[2]),
                                 float(row[3]), float(row[4])))
        if not rows:
            raise DataError(f"{path}: empty quantile summary")
        days = sorted({r[0] for r in rows})
        variables = []
        for r in rows:
            if r[1] not in variables:
                variables.append(r[1])
        day_ix = {d: i for i, d in enumerate(days)}
        var_ix = {v: j for j, v in enumerate(variables)}
        shape = (len(days), len(variables))
        q025, q500, q975 = (np.full(shape, np.nan) for _ in range(3))
        for day, var, a, b, c in rows:
            i, j = day_ix[day], var_ix[var]
            q025[i, j], q500[i, j], q975[i, j] = a, b, c
        if np.any(np.isnan(q025)):
            raise DataError(f"{path}: missing (day, variable) combinations")
        return cls(days=np.array(days), variables=tuple(variables),
                   q025=q025, q500=q500, q975=q975)


def _parallel_map(fn, n_items, threads):
    """Ordered map; results are identical for any worker count."""
    if threads <= 1:
        return [fn(i) for i in range(n_items)]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(n_items)))


def build_forcing(cfg: ExperimentConfig, n_days=None) -> ForcingSeries:
    n_days = cfg.days if n_days is None else n_days
    if cfg.forcing_csv is not None:
        series = load_forcing(cfg.forcing_csv)
        if len(series) < n_days:
            raise ConfigError(f"forcing covers {len(series)} days, need {n_days}")
        return series.slice(0, n_days)
    return synth_climatology(n_days=n_days, start=cfg.forcing_start)


def truth_parameters(prior: PriorSpec, shift: float) -> np.ndarray:
    """Twin-experiment truth: every community parameter displaced from
    its prior mean by `shift` prior log-SDs, signed per
    TRUTH_SHIFT_SIGNS; the state-equation parameters stay at their
    means."""
    theta = []
    for e in prior.entries:
        if e.name in THETA_B_NAMES and e.family == "lognormal":
            theta.append(e.mean * math.exp(
                TRUTH_SHIFT_SIGNS[e.name] * shift * e.sigma))
        else:
            theta.append(e.mean)
    return np.array(theta)


def build_schedule(cfg: ExperimentConfig, n_days: int):
    if cfg.schedule == "daily_all":
        return daily_schedule(range(1, n_days))
    rng = substream(cfg.seed, _TAG_SCHEDULE)
    return sparse_station_schedule(n_days, rng,
                                   mean_interval=cfg.schedule_mean_interval)


def run_prior_ensemble(cfg: ExperimentConfig, forcing=None, prior=None,
                       theta=None):
    """Free-run ensemble: parameters from the prior, no assimilation.

    Returns (summary, paths, thetas); paths has shape
    (ensemble_size, n_days, 14). Passing `theta` pins every member to
    one parameter vector instead of sampling the prior.
    """
    cfg = cfg.resolved()
    if forcing is None:
        forcing = build_forcing(cfg)
    prior = prior if prior is not None else default_priors()
    constants = ExperimentConfig.model_constants(cfg.constants)
    noise = ObsNoise(dict(cfg.obs_sigma))
    if cfg.ensemble_size < 1:
        raise ConfigError("ensemble_size must be >= 1")

    def member(m):
        model = NpzdSsm(forcing, constants, noise)
        th = theta if theta is not None \
            else prior.sample(substream(cfg.seed, _TAG_ENS_THETA, m))
        return np.asarray(th, dtype=float), model.simulate(
            th, substream(cfg.seed, _TAG_ENS_SIM, m))

    results = _parallel_map(member, cfg.ensemble_size, cfg.threads)
    thetas = np.stack([r[0] for r in results])
    paths = np.stack([r[1] for r in results])
    summary = QuantileSummary.from_paths(paths, days=np.arange(len(forcing)))
    return summary, paths, thetas


def write_packed_csv(path, days, packed):
    """One trajectory: day column plus the packed state columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day"] + list(PACKED_COLUMNS))
        for day, row in zip(days, packed):
            writer.writerow([int(day)] + [_fmt(v) for v in row])


def read_packed_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["day"] + list(PACKED_COLUMNS):
            raise DataError(f"{path}: not a packed trajectory file")
        days, rows = [], []
        for row in reader:
            if row:
                days.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
    return np.array(days), np.array(rows)


def write_chain_csv(path, result: PmmhResult):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "accepted", "ln_evidence"] + list(result.names))
        for i in range(len(result.thetas)):
            writer.writerow([i, int(result.accepted[i]), _fmt(result.log_evidences[i])]
                            + [_fmt(v) for v in result.thetas[i]])


def write_draws(out_dir, draws):
    """Thinned trajectory draws plus an index carrying their parameters."""
    os.makedirs(out_dir, exist_ok=True)
    index_path = os.path.join(out_dir, "draws_index.csv")
    with open(index_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["draw", "iteration", "file"] + list(THETA_NAMES))
        for k, d in enumerate(draws):
            name = f"draw_{k:06d}.csv"
            writer.writerow([k, d.iteration, name] + [_fmt(v) for v in d.theta])
            write_packed_csv(os.path.join(out_dir, name),
                             np.arange(d.path.shape[0]), d.path)


def read_draws(traj_dir):
    """Returns (iterations, thetas, paths, days) from a draws directory."""
    index_path = os.path.join(traj_dir, "draws_index.csv")
    if not os.path.exists(index_path):
        raise DataError(f"{traj_dir}: missing draws_index.csv")
    iterations, thetas, paths = [], [], []
    days = None
    with open(index_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["draw", "iteration", "file"] + list(THETA_NAMES):
            raise DataError(f"{index_path}: unexpected header")
        for row in reader:
            if not row:
                continue
            iterations.append(int(row[1]))
            thetas.append([float(v) for v in row[3:]])
            d, packed = read_packed_csv(os.path.join(traj_dir, row[2]))
            paths.append(packed)
            if days is None:
                days = d
            elif not np.array_equal(days, d):
                raise DataError(f"{traj_dir}: draws disagree on day indices")
    if not paths:
        raise DataError(f"{traj_dir}: no stored draws")
    return np.array(iterations), np.array(thetas), np.stack(paths), days


def summarize_draws(traj_dir) -> QuantileSummary:
    _, _, paths, days = read_draws(traj_dir)
    return QuantileSummary.from_paths(paths, days=days)


def _write_common(cfg: ExperimentConfig, out_dir, forcing):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config_resolved.json"), "w",
              encoding="utf-8") as fh:
        fh.write(cfg.to_json_text())
    forcing.to_csv(os.path.join(out_dir, "forcing_used.csv"))


def run_simulate(cfg: ExperimentConfig) -> QuantileSummary:
    """Prior predictive ensemble only; writes the prior state quantiles."""
    cfg = cfg.resolved()
    forcing = build_forcing(cfg)
    summary, _, _ = run_prior_ensemble(cfg, forcing=forcing)
    _write_common(cfg, cfg.out_dir, forcing)
    summary.to_csv(os.path.join(cfg.out_dir, "state_quantiles.csv"))
    return summary


def _run_inference(cfg: ExperimentConfig, forcing, observations, out_dir,
                   prior: PriorSpec, on_iteration=None) -> PmmhResult:
    constants = ExperimentConfig.model_constants(cfg.constants)
    noise = ObsNoise(dict(cfg.obs_sigma))
    model = NpzdSsm(forcing, constants, noise)
    grouped = sorted(group_by_day(observations).items())
    pm_cfg = PmmhConfig(n_particles=cfg.particles, n_iterations=cfg.iterations,
                        warmup=cfg.warmup, seed=cfg.seed,
                        traj_thin=cfg.traj_thin)
    result = pmmh(model, prior, grouped, pm_cfg, n_steps=model.n_steps,
                  on_iteration=on_iteration)
    write_chain_csv(os.path.join(out_dir, "chain.csv"), result)
    write_draws(os.path.join(out_dir, "trajectories"), result.draws)
    posterior = QuantileSummary.from_paths(
        np.stack([d.path for d in result.draws]),
        days=np.arange(len(forcing)))
    posterior.to_csv(os.path.join(out_dir, "state_quantiles.csv"))
    return result


def run_twin(cfg: ExperimentConfig, on_iteration=None):
    """Full twin experiment; returns (truth_path, observations, PmmhResult)."""
    cfg = cfg.resolved()
    forcing = build_forcing(cfg)
    prior = default_priors()
    constants = ExperimentConfig.model_constants(cfg.constants)
    noise = ObsNoise(dict(cfg.obs_sigma))
    out_dir = cfg.out_dir
    _write_common(cfg, out_dir, forcing)

    theta_star = truth_parameters(prior, cfg.truth_shift)
    truth_model = NpzdSsm(forcing, constants, noise)
    truth = truth_model.simulate(theta_star, substream(cfg.seed, _TAG_TRUTH))
    write_packed_csv(os.path.join(out_dir, "truth.csv"),
                     np.arange(len(forcing)), truth)
    with open(os.path.join(out_dir, "truth_theta.json"), "w",
              encoding="utf-8") as fh:
        json.dump(dict(zip(THETA_NAMES, map(float, theta_star))), fh, indent=2)
        fh.write("\n")

    schedule = build_schedule(cfg, len(forcing))
    observations = synth_observations(truth[:, :4], truth[:, -1], noise,
                                      schedule, substream(cfg.seed, _TAG_OBS),
                                      floor=constants.model_floor)
    save_observations(observations, os.path.join(out_dir, "observations.csv"))

    if cfg.ensemble_size > 0:
        prior_summary, _, _ = run_prior_ensemble(cfg, forcing=forcing, prior=prior)
        prior_summary.to_csv(os.path.join(out_dir, "prior_state_quantiles.csv"))

    result = _run_inference(cfg, forcing, observations, out_dir, prior,
                            on_iteration=on_iteration)
    return truth, observations, result


def run_infer(cfg: ExperimentConfig, on_iteration=None) -> PmmhResult:
    """Assimilate an observation file over the configured forcing span."""
    cfg = cfg.resolved()
    forcing = build_forcing(cfg)
    observations = load_observations(cfg.obs_csv)
    n_days = len(forcing)
    bad = [o for o in observations if not 1 <= o.day < n_days]
    if bad:
        raise DataError(f"{cfg.obs_csv}: observation days outside 1..{n_days - 1} "
                        f"(first offender: day {bad[0].day})")
    out_dir = cfg.out_dir
    _write_common(cfg, out_dir, forcing)
    prior = default_priors()
    if cfg.ensemble_size > 0:
        prior_summary, _, _ = run_prior_ensemble(cfg, forcing=forcing, prior=prior)
        prior_summary.to_csv(os.path.join(out_dir, "prior_state_quantiles.csv"))
    return _run_inference(cfg, forcing, observations, out_dir, prior,
                          on_iteration=on_iteration)


def run_forecast(cfg: ExperimentConfig) -> QuantileSummary:
    """Push every stored posterior draw through the forecast span.

    The run directory must hold a finished twin/infer run; its resolved
    configuration supplies the hindcast span and forcing construction,
    while this config contributes forecast_days, seed and any model
    constant overrides (e.g. switching off the process noise).
    """
    cfg = cfg.resolved()
    prev_path = os.path.join(cfg.run_dir, "config_resolved.json")
    if not os.path.exists(prev_path):
        raise ConfigError(f"{cfg.run_dir}: missing config_resolved.json")
    prev = ExperimentConfig.from_json_file(prev_path)
    if prev.mode not in ("twin", "infer"):
        raise ConfigError(f"{cfg.run_dir}: run_dir must hold a twin/infer run, "
                          f"found mode {prev.mode!r}")
    total_days = prev.days + cfg.forecast_days
    source = dataclasses.replace(prev, forcing_csv=cfg.forcing_csv
                                 if cfg.forcing_csv is not None else prev.forcing_csv)
    forcing = build_forcing(source, n_days=total_days)
    t0 = prev.days - 1  # last assimilated day == forecast initial day
    span = forcing.slice(t0, cfg.forecast_days + 1)

    constants_doc = dict(prev.constants)
    constants_doc.update(cfg.constants)
    constants = ExperimentConfig.model_constants(constants_doc)
    noise = ObsNoise(dict(prev.obs_sigma))

    _, thetas, paths, days = read_draws(os.path.join(cfg.run_dir, "trajectories"))
    if days[-1] != t0:
        raise ConfigError(f"stored draws end on day {days[-1]}, expected {t0}; "
                          "forecast span must start where assimilation ended")
    n_draws = paths.shape[0]

    def continue_draw(k):
        model = NpzdSsm(span, constants, noise)
        w = paths[k, -1:].copy()
        rng = substream(cfg.seed, _TAG_FORECAST, k)
        out = np.empty((cfg.forecast_days + 1, w.shape[1]))
        out[0] = w[0]
        for t in range(1, cfg.forecast_days + 1):
            w = model.transition(w, thetas[k], t, rng)
            out[t] = w[0]
        return out

    fc_paths = np.stack(_parallel_map(continue_draw, n_draws, cfg.threads))
    summary = QuantileSummary.from_paths(
        fc_paths, days=np.arange(t0, t0 + cfg.forecast_days + 1))
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_common(cfg, cfg.out_dir, span)
    summary.to_csv(os.path.join(cfg.out_dir, "state_quantiles.csv"))
    return summary
