"""The stochastic NPZD model packaged as a state-space model.

Each particle carries the four pools, the nine community processes and
the chlorophyll diagnostic in one 14-column row (see `kernels`). One
transition advances a particle one day: the community processes take an
AR step, the pools are integrated under the *previous* day's processes,
and the chlorophyll diagnostic is re-evaluated at the arrival state so
the data model can compare pigment observations against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernels
from .ar import ArSpec, innovation_params
from .errors import ConfigError, IntegrationError
from .model import BGC_COMPONENTS, CHI_MAX_REDFIELD
from .obs import STATE_COLUMN, ObsNoise, lognormal_loglik
from .priors import THETA_NAMES

# Species-level log-scale SDs of the nine community processes, matching
# the sigma column of the bundled prior table for the corresponding
# community means.
SPECIES_SIGMA = {
    "gmax": 0.63,
    "lam": 0.37,
    "rn": 0.3,
    "an": 1.0,
    "iz": 0.7,
    "clz": 1.3,
    "ez": 0.25,
    "rd": 0.5,
    "mq": 1.0,
}

# Which diversity factor and turnover time drive each process. The
# detrital remineralization rate rides with the zooplankton-side factor;
# nothing in the source material pins it to either side.
PHYTO_COMPONENTS = ("gmax", "lam", "rn", "an")
ZOO_COMPONENTS = ("iz", "clz", "ez", "rd", "mq")

# Processes that are dimensionless fractions; their AR paths are capped
# just below 1 so the dynamics stay physical.
FRACTION_COMPONENTS = ("rn", "ez")
FRACTION_CAP = 1.0 - 1e-9

_THETA_INDEX = {name: i for i, name in enumerate(THETA_NAMES)}
_MU_FOR = {"gmax": "mu_gmax", "lam": "mu_lambdamax", "rn": "mu_rn",
           "an": "mu_an", "iz": "mu_iz", "clz": "mu_clz", "ez": "mu_ez",
           "rd": "mu_rd", "mq": "mu_mq"}


@dataclass(frozen=True)
class ModelConstants:
    """Prescribed constants and configuration switches of the model."""

    q10: float = 2.0
    t_ref: float = 10.0
    upsilon: float = 1.0
    chi_max: float = CHI_MAX_REDFIELD
    q_yield: float = 1200.0
    kappa: float = 0.1
    dt: float = 1.0
    n_sub: int = 24
    tau_p: float = 10.0  # phytoplankton community turnover time (d)
    tau_z: float = 10.0  # zooplankton community turnover time (d)
    ar_sigma_scale: float = 1.0  # scales all species sigmas; 0 freezes the processes
    model_floor: float = 1e-6  # likelihood floor for collapsed pools
    init_p_mean: float = 5.0
    init_p_sigma: float = 0.5
    init_z_mean: float = 5.0
    init_z_sigma: float = 0.5
    init_d_mean: float = 2.0
    init_d_sigma: float = 0.5
    species_sigma: dict = field(default_factory=lambda: dict(SPECIES_SIGMA))

    def __post_init__(self):
        if self.tau_p < 1.0 or self.tau_z < 1.0:
            raise ConfigError("turnover times must be >= 1 day so the AR "
                              "coefficient stays in [0, 1)")
        if self.n_sub < 1:
            raise ConfigError("n_sub must be >= 1")
        if self.ar_sigma_scale < 0:
            raise ConfigError("ar_sigma_scale must be >= 0")

    def to_dict(self):
        return asdict(self)


class _ThetaContext:
    """Per-parameter-vector precomputation shared by all filter steps."""

    def __init__(self, theta, constants: ModelConstants):
        th = {name: float(theta[_THETA_INDEX[name]]) for name in THETA_NAMES}
        self.k_w = th["k_w"]
        self.a_ch = th["a_ch"]
        self.s_d = th["s_d"]
        self.f_d = min(th["f_d"], 1.0)
        pdf = min(th["pdf"], 1.0)
        zdf = min(th["zdf"], 1.0)
        self.mu_z = np.empty(kernels.B_COLS)
        self.sigma_z = np.empty(kernels.B_COLS)
        self.ar_coef = np.empty(kernels.B_COLS)
        self.ar_scale = np.empty(kernels.B_COLS)
        self.b_cap = np.full(kernels.B_COLS, np.inf)
        self.tau = np.empty(kernels.B_COLS)
        for j, comp in enumerate(BGC_COMPONENTS):
            mean = th[_MU_FOR[comp]]
            sigma_l = constants.species_sigma[comp] * constants.ar_sigma_scale
            if comp in PHYTO_COMPONENTS:
                tau, df = constants.tau_p, pdf
            else:
                tau, df = constants.tau_z, zdf
            spec = ArSpec(mu_lphi=math.log(mean) - sigma_l ** 2 / 2.0,
                          sigma_lphi=sigma_l, tau=tau, df=df)
            innov = innovation_params(spec)
            self.mu_z[j] = innov.mu_z
            self.sigma_z[j] = innov.sigma_z
            self.ar_coef[j] = 1.0 - 1.0 / tau
            self.ar_scale[j] = 1.0 / tau
            self.tau[j] = tau
            if comp in FRACTION_COMPONENTS:
                self.b_cap[j] = FRACTION_CAP


class NpzdSsm:
    """State-space interface over a forcing series.

    Parameters
    ----------
    forcing : ForcingSeries (or anything exposing mld/psi/temp/par/bcn
        arrays of equal length); day 0 hosts the initial state, and the
        transition into day t uses the day-t forcing record.
    constants : ModelConstants
    noise : ObsNoise used by obs_loglik
    """

    state_dim = kernels.N_COLS

    def __init__(self, forcing, constants: ModelConstants = None,
                 noise: ObsNoise = None):
        self.constants = constants if constants is not None else ModelConstants()
        self.noise = noise if noise is not None else ObsNoise()
        self.mld = np.asarray(forcing.mld, dtype=float)
        self.psi = np.asarray(forcing.psi, dtype=float)
        self.temp = np.asarray(forcing.temp, dtype=float)
        self.par = np.asarray(forcing.par, dtype=float)
        self.bcn = np.asarray(forcing.bcn, dtype=float)
        self.n_days = len(self.mld)
        if self.n_days < 1:
            raise ConfigError("forcing series is empty")
        self._ctx_theta = None
        self._ctx = None

    @property
    def n_steps(self):
        return self.n_days - 1

    def context(self, theta) -> _ThetaContext:
        theta = np.asarray(theta, dtype=float)
        if self._ctx is None or not np.array_equal(self._ctx_theta, theta):
            self._ctx = _ThetaContext(theta, self.constants)
            self._ctx_theta = theta.copy()
        return self._ctx

    def initial_particles(self, theta, n, rng: np.random.Generator):
        """Day-0 ensemble: N pinned to the boundary DIN, P/Z/D lognormal,
        community processes from their stationary law, chlorophyll
        evaluated with no self-shading."""
        ctx = self.context(theta)
        c = self.constants
        w = np.empty((n, kernels.N_COLS))
        w[:, 0] = self.bcn[0]
        for col, (mean, sig) in ((1, (c.init_p_mean, c.init_p_sigma)),
                                 (2, (c.init_z_mean, c.init_z_sigma)),
                                 (3, (c.init_d_mean, c.init_d_sigma))):
            w[:, col] = np.exp(math.log(mean) - sig ** 2 / 2.0
                               + sig * rng.standard_normal(n))
        b = np.exp(ctx.mu_z + ctx.sigma_z * rng.standard_normal((n, kernels.B_COLS)))
        np.minimum(b, ctx.b_cap, out=b)
        n_burn = math.ceil(20.0 * max(c.tau_p, c.tau_z))
        burn_noise = rng.standard_normal((n_burn, n, kernels.B_COLS))
        kernels.ar_burnin(b, burn_noise, ctx.mu_z, ctx.sigma_z,
                          ctx.ar_coef, ctx.ar_scale, ctx.b_cap)
        w[:, 4:13] = b
        w[:, kernels.CHLA_COL] = self._diag_chla(w, ctx, day=0, chla_atten=0.0)
        return w

    def _diag_chla(self, w, ctx, day, chla_atten):
        """Chlorophyll diagnostic for packed particles at the given day."""
        tc = self.constants.q10 ** ((self.temp[day] - self.constants.t_ref) / 10.0)
        kz = (ctx.k_w + ctx.a_ch * np.asarray(chla_atten)) * self.mld[day]
        safe = np.where(kz == 0.0, 1.0, kz)
        e = self.par[day] * np.where(kz == 0.0, 1.0, -np.expm1(-safe) / safe)
        gmax, lam, rn, an = w[:, 4], w[:, 5], w[:, 6], w[:, 7]
        alpha = ctx.a_ch * self.constants.q_yield
        h_e = -np.expm1(-alpha * lam * e / gmax)
        h_n = w[:, 0] / (gmax * tc / an + w[:, 0])
        denom = rn * h_e + h_n
        safe_d = np.where(denom == 0.0, 1.0, denom)
        return np.where(denom == 0.0, 0.0,
                        w[:, 1] * (lam / self.constants.chi_max) * h_n * tc / safe_d)

    def transition(self, particles, theta, t, rng: np.random.Generator):
        if not 1 <= t <= self.n_steps:
            raise ConfigError(f"transition time {t} outside forcing span")
        ctx = self.context(theta)
        c = self.constants
        noise = rng.standard_normal((particles.shape[0], kernels.B_COLS))
        out = np.empty_like(particles)
        kernels.advance_day(particles, noise, ctx.mu_z, ctx.sigma_z,
                            ctx.ar_coef, ctx.ar_scale, ctx.b_cap,
                            self.mld[t], self.psi[t], self.temp[t],
                            self.par[t], self.bcn[t],
                            ctx.k_w, ctx.a_ch, ctx.s_d, ctx.f_d,
                            c.q10, c.t_ref, c.upsilon, c.chi_max, c.q_yield,
                            c.kappa, c.dt, c.n_sub, out)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"non-finite particle state on day {t}", step=t)
        return out

    def obs_loglik(self, observations, particles, theta):
        total = np.zeros(particles.shape[0])
        for o in observations:
            col = kernels.CHLA_COL if o.variable == "chla" else STATE_COLUMN[o.variable]
            total += lognormal_loglik(o.value, particles[:, col],
                                      self.noise.sigma(o.variable),
                                      floor=self.constants.model_floor)
        return total

    def simulate(self, theta, rng: np.random.Generator) -> np.ndarray:
        """One realization of the model over the whole forcing span.

        Returns the packed (n_days, 14) trajectory; day 0 is the initial
        draw.
        """
        w = self.initial_particles(theta, 1, rng)
        traj = np.empty((self.n_days, kernels.N_COLS))
        traj[0] = w[0]
        for t in range(1, self.n_days):
            w = self.transition(w, theta, t, rng)
            traj[t] = w[0]
        return traj


# Column names of the packed particle layout, used by writers/readers.
PACKED_COLUMNS = ("din", "p", "z", "d") + tuple(f"b_{c}" for c in BGC_COMPONENTS) + ("chla",)
