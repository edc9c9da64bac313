"""Prior distributions over the static model parameters.

Fifteen independent scalar priors: four parameters entering the state
equations directly (k_w, a_ch, s_d, f_d) and eleven controlling the
community processes (the two diversity factors plus the nine
community-mean properties). All are lognormal except the detrital
sinking rate s_d, which is Gaussian truncated at zero.

The `mean` column of each entry is interpreted as the natural-units
expected value, with `sigma` the log-scale SD, so lognormal entries use
log-mean ln(mean) - sigma^2/2. A "median" convention (mean column read
as exp of the log-mean) is also supported and recorded in the
serialized form, so either interpretation can be tested.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError

LOG_ZERO = float("-inf")

_FAMILIES = ("lognormal", "normal")
_CONVENTIONS = ("natural", "median")

# (name, family, mean, sigma) in canonical parameter order.
_DEFAULT_TABLE = (
    ("k_w", "lognormal", 0.03, 0.2),
    ("a_ch", "lognormal", 0.04, 0.3),
    ("s_d", "normal", 5.0, 1.0),
    ("f_d", "lognormal", 0.5, 0.1),
    ("pdf", "lognormal", 0.15, 0.4),
    ("zdf", "lognormal", 0.15, 0.4),
    ("mu_gmax", "lognormal", 1.2, 0.63),
    ("mu_rn", "lognormal", 0.25, 0.3),
    ("mu_lambdamax", "lognormal", 0.03, 0.37),
    ("mu_an", "lognormal", 0.3, 1.0),
    ("mu_iz", "lognormal", 4.7, 0.7),
    ("mu_clz", "lognormal", 0.2, 1.3),
    ("mu_ez", "lognormal", 0.32, 0.25),
    ("mu_mq", "lognormal", 0.01, 1.0),
    ("mu_rd", "lognormal", 0.1, 0.5),
)

THETA_NAMES = tuple(row[0] for row in _DEFAULT_TABLE)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _std_normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class PriorEntry:
    """One scalar prior: family plus its two defining numbers."""

    name: str
    family: str
    mean: float
    sigma: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown prior family {self.family!r}")
        if not self.mean > 0:
            raise DomainError(f"prior mean for {self.name} must be > 0")
        if not self.sigma > 0:
            raise DomainError(f"prior sigma for {self.name} must be > 0")

    def log_mean(self, convention="natural") -> float:
        """Location of the underlying normal for a lognormal entry."""
        if convention == "natural":
            return math.log(self.mean) - self.sigma ** 2 / 2.0
        return math.log(self.mean)

    def expected_value(self, convention="natural") -> float:
        """E[X] in natural units."""
        if self.family == "normal":
            # Truncation at zero: mean shifts up by sigma*phi(a)/(1-Phi(a)).
            a = -self.mean / self.sigma
            lam = math.exp(-a * a / 2.0) / (_SQRT_2PI * (1.0 - _std_normal_cdf(a)))
            return self.mean + self.sigma * lam
        return math.exp(self.log_mean(convention) + self.sigma ** 2 / 2.0)

    def sd_value(self, convention="natural") -> float:
        """SD[X] in natural units."""
        if self.family == "normal":
            a = -self.mean / self.sigma
            lam = math.exp(-a * a / 2.0) / (_SQRT_2PI * (1.0 - _std_normal_cdf(a)))
            var = self.sigma ** 2 * (1.0 + a * lam - lam ** 2)
            return math.sqrt(var)
        return self.expected_value(convention) * math.sqrt(math.expm1(self.sigma ** 2))

    def log_sd(self) -> float:
        """Spread on the log scale, used to seed proposal step sizes."""
        if self.family == "normal":
            return self.sigma / self.mean
        return self.sigma

    def sample(self, rng: np.random.Generator, convention="natural") -> float:
        return float(self.sample_n(rng, 1, convention)[0])

    def sample_n(self, rng: np.random.Generator, n: int,
                 convention="natural") -> np.ndarray:
        if self.family == "normal":
            out = rng.normal(self.mean, self.sigma, n)
            bad = out <= 0.0
            while np.any(bad):  # redraw below-zero values (truncation)
                out[bad] = rng.normal(self.mean, self.sigma, int(bad.sum()))
                bad = out <= 0.0
            return out
        return np.exp(rng.normal(self.log_mean(convention), self.sigma, n))

    def log_density(self, x, convention="natural") -> float:
        if not np.isfinite(x) or x <= 0.0:
            return LOG_ZERO
        if self.family == "normal":
            z = (x - self.mean) / self.sigma
            log_norm = math.log(_std_normal_cdf(self.mean / self.sigma))
            return -math.log(self.sigma * _SQRT_2PI) - z * z / 2.0 - log_norm
        z = (math.log(x) - self.log_mean(convention)) / self.sigma
        return -math.log(x * self.sigma * _SQRT_2PI) - z * z / 2.0


class PriorSpec:
    """An ordered, independent collection of scalar priors."""

    def __init__(self, entries, convention="natural"):
        if convention not in _CONVENTIONS:
            raise DomainError(f"unknown lognormal-mean convention {convention!r}")
        self.entries = tuple(entries)
        self.convention = convention
        self._index = {e.name: i for i, e in enumerate(self.entries)}
        if len(self._index) != len(self.entries):
            raise DomainError("duplicate prior entry names")

    def __len__(self):
        return len(self.entries)

    @property
    def names(self):
        return tuple(e.name for e in self.entries)

    def index(self, name: str) -> int:
        return self._index[name]

    def entry(self, name: str) -> PriorEntry:
        return self.entries[self._index[name]]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([e.sample(rng, self.convention) for e in self.entries])

    def log_density(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (len(self.entries),):
            raise DomainError(f"theta must have {len(self.entries)} components")
        total = 0.0
        for e, x in zip(self.entries, theta):
            lp = e.log_density(float(x), self.convention)
            if lp == LOG_ZERO:
                return LOG_ZERO
            total += lp
        return total

    def mean_values(self) -> np.ndarray:
        """Expected values in natural units (what a long chain should average to)."""
        return np.array([e.expected_value(self.convention) for e in self.entries])

    def sd_values(self) -> np.ndarray:
        return np.array([e.sd_value(self.convention) for e in self.entries])

    def log_sds(self) -> np.ndarray:
        return np.array([e.log_sd() for e in self.entries])

    def to_json_text(self) -> str:
        doc = {
            "convention": {"lognormal_mean": self.convention},
            "parameters": [
                {"name": e.name, "family": e.family, "mean": e.mean, "sigma": e.sigma}
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json_text(cls, text: str) -> "PriorSpec":
        doc = json.loads(text)
        convention = doc.get("convention", {}).get("lognormal_mean", "natural")
        entries = [PriorEntry(name=p["name"], family=p["family"],
                              mean=float(p["mean"]), sigma=float(p["sigma"]))
                   for p in doc["parameters"]]
        return cls(entries, convention=convention)

    @classmethod
    def from_json_file(cls, path) -> "PriorSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_text(fh.read())


def default_priors(convention="natural") -> PriorSpec:
    """The fifteen built-in priors in canonical order."""
    return PriorSpec(
        (PriorEntry(name=n, family=f, mean=m, sigma=s) for n, f, m, s in _DEFAULT_TABLE),
        convention=convention,
    )


def shipped_priors_text() -> str:
    """Contents of the bundled prior table, as shipped."""
    return resources.files("npzdfilter").joinpath("data/priors_table_b1.json").read_text("utf-8")


@dataclass(frozen=True)
class ThetaSample:
    """A named view of one 15-component parameter vector."""

    k_w: float
    a_ch: float
    s_d: float
    f_d: float
    pdf: float
    zdf: float
    mu_gmax: float
    mu_rn: float
    mu_lambdamax: float
    mu_an: float
    mu_iz: float
    mu_clz: float
    mu_ez: float
    mu_mq: float
    mu_rd: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in THETA_NAMES], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ThetaSample":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (len(THETA_NAMES),):
            raise DomainError(f"theta must have {len(THETA_NAMES)} components")
        return cls(**{n: float(v) for n, v in zip(THETA_NAMES, arr)})
