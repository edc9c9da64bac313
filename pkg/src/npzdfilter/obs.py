"""Lognormal multiplicative observation model.

Observations are noisy snapshots of a state pool (din, p, z, d) or of
the chlorophyll-a diagnostic (chla): Y = X * exp(xi) with xi normal and
zero-mean on the log scale. Chlorophyll observations always compare
against the diagnostic pigment concentration, never against
phytoplankton nitrogen directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError

# Observable names; the first four map onto state pools, chla onto the
# growth diagnostic. B-process names are reserved in files but carry no
# likelihood.
OBS_VARIABLES = ("din", "p", "z", "d", "chla")
STATE_COLUMN = {"din": 0, "p": 1, "z": 2, "d": 3}

# States at or below this floor are treated as the floor when evaluating
# the likelihood, so a collapsed pool cannot produce log(0).
DEFAULT_MODEL_FLOOR = 1e-6

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Observation:
    """One measurement: day index, variable name, positive value."""

    day: int
    variable: str
    value: float

    def __post_init__(self):
        if self.variable not in OBS_VARIABLES:
            raise DomainError(f"unknown observed variable {self.variable!r}")
        if not (np.isfinite(self.value) and self.value > 0):
            raise DomainError("observed values must be finite and > 0")


@dataclass(frozen=True)
class ObsNoise:
    """Log-scale SD of the observation error, per variable."""

    sigma_log: dict = field(default_factory=lambda: dict(TWIN_SIGMA))

    def __post_init__(self):
        for name, sig in self.sigma_log.items():
            if name not in OBS_VARIABLES:
                raise DomainError(f"unknown observed variable {name!r}")
            if not sig > 0:
                raise DomainError(f"sigma_log for {name} must be > 0")

    def sigma(self, variable: str) -> float:
        return self.sigma_log[variable]


# Twin experiments prescribe the log-scale SD directly.
TWIN_SIGMA = {"din": 0.1, "p": 0.2, "z": 0.2, "d": 0.2, "chla": 0.2}


def cv_to_sigma_log(cv: float) -> float:
    """Log-scale SD of a lognormal with the given coefficient of variation."""
    if not cv > 0:
        raise DomainError("cv must be > 0")
    return math.sqrt(math.log1p(cv * cv))


def sigma_log_to_cv(sigma_log: float) -> float:
    return math.sqrt(math.expm1(sigma_log * sigma_log))


def station_noise(cv: float = 0.5, variables=("din", "chla")) -> ObsNoise:
    """Field-campaign style noise: a CV converted to a log-scale SD."""
    return ObsNoise({v: cv_to_sigma_log(cv) for v in variables})


def synth_observations(states, chla, noise: ObsNoise, schedule,
                       rng: np.random.Generator, floor=DEFAULT_MODEL_FLOOR):
    """Generate noisy observations of a known trajectory.

    Parameters
    ----------
    states : ndarray (n_days, 4)
        True pools in (din, p, z, d) order, day 0 first.
    chla : ndarray (n_days,)
        True chlorophyll-a diagnostic.
    noise : ObsNoise
    schedule : iterable of (day, variable)
        Which measurements to synthesize; noise draws are independent
        and consumed in the iteration order of the schedule.
    floor : float
        True values below this are reported at the floor, mirroring the
        floor applied when the likelihood is evaluated.

    Returns a list of Observation sorted by (day, variable).
    """
    states = np.asarray(states, dtype=float)
    chla = np.asarray(chla, dtype=float)
    n_days = states.shape[0]
    out = []
    for day, variable in schedule:
        if not 0 <= day < n_days:
            raise DataError(f"schedule references day {day} outside the trajectory")
        truth = chla[day] if variable == "chla" else states[day, STATE_COLUMN[variable]]
        truth = max(float(truth), floor)
        value = truth * math.exp(noise.sigma(variable) * rng.standard_normal())
        out.append(Observation(day=int(day), variable=variable, value=value))
    return sorted(out, key=lambda o: (o.day, o.variable))


def lognormal_loglik(value, model_value, sigma_log, floor=DEFAULT_MODEL_FLOOR):
    """Log-density of `value` under a lognormal centred on `model_value`.

    Vectorized over `model_value`; values at or below `floor` are lifted
    to the floor.
    """
    model_value = np.maximum(np.asarray(model_value, dtype=float), floor)
    z = (math.log(value) - np.log(model_value)) / sigma_log
    return -math.log(value * sigma_log) - _LOG_SQRT_2PI - z * z / 2.0


def obs_loglik(observations, state, chla, noise: ObsNoise,
               floor=DEFAULT_MODEL_FLOOR):
    """Joint log-likelihood of the observations taken at one time.

    `state` is the (4,) pool vector and `chla` the diagnostic at that
    time. An empty observation list contributes exactly 0.
    """
    state = np.asarray(state, dtype=float)
    total = 0.0
    for o in observations:
        model_value = chla if o.variable == "chla" else state[STATE_COLUMN[o.variable]]
        total += float(lognormal_loglik(o.value, model_value, noise.sigma(o.variable),
                                        floor=floor))
    return total


def daily_schedule(days, variables=OBS_VARIABLES):
    """Every listed variable on every listed day."""
    return [(int(d), v) for d in days for v in variables]


def sparse_station_schedule(n_days, rng: np.random.Generator,
                            mean_interval=14.0, variables=("din", "chla")):
    """Irregular field-campaign style schedule: geometric gaps, din+chla only."""
    schedule = []
    day = 1 + int(rng.geometric(1.0 / mean_interval))
    while day < n_days:
        for v in variables:
            schedule.append((day, v))
        day += int(rng.geometric(1.0 / mean_interval))
    return schedule


def load_observations(path):
    """Read observations from a CSV with header day,variable,value."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["day", "variable", "value"]:
            raise DataError(f"{path}: expected header day,variable,value, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                obs = Observation(day=int(row[0]), variable=row[1].strip(),
                                  value=float(row[2]))
            except (ValueError, DomainError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            out.append(obs)
    return sorted(out, key=lambda o: (o.day, o.variable))


def save_observations(observations, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "variable", "value"])
        for o in observations:
            writer.writerow([o.day, o.variable, repr(o.value)])


def group_by_day(observations):
    """Map day -> list of observations, for per-step likelihood lookups."""
    grouped = {}
    for o in observations:
        grouped.setdefault(o.day, []).append(o)
    return grouped
