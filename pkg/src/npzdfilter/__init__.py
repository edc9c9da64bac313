"""Stochastic NPZD mixed-layer model with particle-based Bayesian inference.

The package combines a four-pool nitrogen cycle driven by daily
mixed-layer forcing, autoregressive community processes with lognormal
innovations, a lognormal multiplicative data model, and a bootstrap
particle filter wrapped in particle-marginal Metropolis-Hastings for
joint state and parameter estimation, hindcasts and forecasts.
"""

from .ar import ArSpec, InnovationParams, ar_step, init_stationary, \
    innovation_params, stationary_moments
from .config import ExperimentConfig
from .errors import (ConfigError, DataError, DomainError, FilterCollapseError,
                     InferenceStartupError, IntegrationError)
from .forcing import ClimatologyParams, ForcingSeries, load_forcing, \
    synth_climatology
from .model import (BGC_COMPONENTS, CHI_MAX_REDFIELD, BgcVector, ForcingRecord,
                    GrowthDiagnostics, StateVector, StaticParams, composition,
                    grazing_rate, growth_diagnostics, growth_limits,
                    growth_rate, light_field, mortality_rate, reaction_terms,
                    remin_rate, step, temp_correction, transport_terms)
from .npzd_ssm import ModelConstants, NpzdSsm, PACKED_COLUMNS
from .obs import (ObsNoise, Observation, cv_to_sigma_log, load_observations,
                  obs_loglik, save_observations, sigma_log_to_cv,
                  station_noise, synth_observations)
from .pmmh import PmmhConfig, PmmhResult, TrajectoryDraw, adapt_proposal, \
    log_accept_ratio, pmmh, substream
from .priors import PriorEntry, PriorSpec, THETA_NAMES, ThetaSample, \
    default_priors, shipped_priors_text
from .smc import (ParticleEnsemble, bootstrap_filter, draw_trajectory,
                  resample_multinomial, resample_systematic)
from .ssm import LinearGaussianSSM, kalman_loglik
from .experiments import (QuantileSummary, run_forecast, run_infer,
                          run_prior_ensemble, run_simulate, run_twin,
                          summarize, truth_parameters)

__version__ = "0.1.0"
