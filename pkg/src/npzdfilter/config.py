"""Experiment configuration: JSON in, fully-resolved JSON out.

A single flat document drives every run mode. Unknown keys are
rejected; every default that ends up being used is echoed back out in
``config_resolved.json`` so a run can be reproduced from its output
directory alone.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .npzd_ssm import ModelConstants
from .obs import OBS_VARIABLES, TWIN_SIGMA

MODES = ("simulate", "twin", "infer", "forecast")
SCHEDULES = ("daily_all", "station_sparse")


@dataclass
class ExperimentConfig:
    mode: str = "twin"
    seed: int = 0
    days: int = 730  # assimilation / simulation span (daily records)
    forcing_csv: str | None = None  # None -> synthetic climatology
    forcing_start: str = "1971-01-01"
    obs_csv: str | None = None
    particles: int = 500
    iterations: int = 50_000
    warmup: int = 5_000
    traj_thin: int | None = None  # None -> aim for ~400 stored draws
    ensemble_size: int = 200
    threads: int = 1
    obs_sigma: dict = field(default_factory=lambda: dict(TWIN_SIGMA))
    schedule: str = "daily_all"
    schedule_mean_interval: float = 14.0
    truth_shift: float = 0.5  # log-SD units applied to the community parameters
    forecast_days: int = 365
    run_dir: str | None = None  # forecast input: a finished twin/infer run
    out_dir: str = "out"
    constants: dict = field(default_factory=dict)  # ModelConstants overrides

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**doc)

    def resolved(self) -> "ExperimentConfig":
        """A copy with every derived default filled in and validated."""
        cfg = dataclasses.replace(self)
        if cfg.mode not in MODES:
            raise ConfigError(f"unknown mode {cfg.mode!r}")
        if cfg.days < 2:
            raise ConfigError("days must be >= 2")
        if cfg.mode in ("twin", "infer"):
            if cfg.iterations < 1:
                raise ConfigError("iterations must be >= 1")
            if not 0 <= cfg.warmup < cfg.iterations:
                raise ConfigError("warmup must lie in [0, iterations)")
            if cfg.particles < 1:
                raise ConfigError("particles must be >= 1")
            if cfg.traj_thin is None:
                cfg.traj_thin = max(1, (cfg.iterations - cfg.warmup) // 400)
            if cfg.traj_thin < 1:
                raise ConfigError("traj_thin must be >= 1")
        if cfg.mode == "infer" and cfg.obs_csv is None:
            raise ConfigError("infer mode needs obs_csv")
        if cfg.mode == "forecast":
            if cfg.run_dir is None:
                raise ConfigError("forecast mode needs run_dir pointing at a "
                                  "finished twin/infer run")
            if cfg.forecast_days < 1:
                raise ConfigError("forecast_days must be >= 1")
        if cfg.schedule not in SCHEDULES:
            raise ConfigError(f"unknown observation schedule {cfg.schedule!r}")
        for name in cfg.obs_sigma:
            if name not in OBS_VARIABLES:
                raise ConfigError(f"obs_sigma names unknown variable {name!r}")
        if cfg.threads < 1:
            raise ConfigError("threads must be >= 1")
        self.model_constants(cfg.constants)  # validates overrides
        return cfg

    @staticmethod
    def model_constants(overrides: dict) -> ModelConstants:
        known = {f.name for f in dataclasses.fields(ModelConstants)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown model constants {sorted(unknown)}")
        return ModelConstants(**overrides)

    def to_json_text(self) -> str:
        doc = dataclasses.asdict(self)
        # Echo the constants actually in effect, not only the overrides.
        doc["constants"] = self.model_constants(self.constants).to_dict()
        return json.dumps(doc, indent=2) + "\n"
