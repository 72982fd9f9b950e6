"""Experiment configuration: a single JSON file, schema-versioned, strict.

Unknown keys anywhere in the file are rejected (fail-fast).  A parsed config
serializes back to the exact same canonical form, and its hash stamps every
artifact header so outputs can be traced to the configuration that made them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

SCHEMA_VERSION = 1

PAPER_T_RATIOS = {"lad": 0.007, "ar": 0.101, "gk": 1.0}

# desk-scale sampling replications; the paper protocol uses 10000 everywhere
DESK_SAMPLING_REPLICATIONS = {"lad": 3000, "ar": 3000, "gk": 800}


class ConfigError(ValueError):
    """Malformed configuration file or values."""


@dataclass(frozen=True)
class GaSettings:
    population: int = 50
    crossover_rate: float = 0.7
    mutation_rate: float = 0.1
    generations: int = 700


@dataclass(frozen=True)
class MonteCarloSettings:
    sampling_replications: int = 3000
    datasets: int = 10
    runs_per_dataset: int = 100


@dataclass(frozen=True)
class RateSettings:
    candidates: tuple[float, ...] = (1.0 / 3.0, 0.5, 1.0, 2.0)
    burn_in: int = 5


@dataclass(frozen=True)
class CostSettings:
    sample_cost: float = 1.0
    eval_cost: float = 1.0
    budget: float = 1e5
    sample_cost_grid: tuple[float, ...] = (0.1, 0.31622776601683794, 1.0, 3.1622776601683795,
                                           10.0, 31.622776601683793, 100.0)
    eval_cost_grid: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0, 10.0)
    t_ratios: dict = field(default_factory=lambda: dict(PAPER_T_RATIOS))


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "lad"
    n: int = 200
    master_seed: int = 20240601
    out_dir: str = "out"
    threads: int = 1
    runs: int = 1                      # GA runs written by the run-ga command
    ga: GaSettings = field(default_factory=GaSettings)
    monte_carlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    rate: RateSettings = field(default_factory=RateSettings)
    cost: CostSettings = field(default_factory=CostSettings)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rate"]["candidates"] = list(self.rate.candidates)
        d["cost"]["sample_cost_grid"] = list(self.cost.sample_cost_grid)
        d["cost"]["eval_cost_grid"] = list(self.cost.eval_cost_grid)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def config_hash(self) -> str:
        """Hash of the experimental settings; where outputs go and how many
        workers run are operational and deliberately excluded."""
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("threads")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _take(data: dict, cls, name: str):
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    return data


def _build(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    _take(data, ExperimentConfig, "config")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")

    kwargs = dict(data)
    if "ga" in kwargs:
        kwargs["ga"] = GaSettings(**_take(kwargs["ga"], GaSettings, "ga"))
    if "monte_carlo" in kwargs:
        kwargs["monte_carlo"] = MonteCarloSettings(
            **_take(kwargs["monte_carlo"], MonteCarloSettings, "monte_carlo"))
    if "rate" in kwargs:
        sub = _take(kwargs["rate"], RateSettings, "rate")
        if "candidates" in sub:
            sub = dict(sub, candidates=tuple(float(a) for a in sub["candidates"]))
        kwargs["rate"] = RateSettings(**sub)
    if "cost" in kwargs:
        sub = _take(kwargs["cost"], CostSettings, "cost")
        for grid in ("sample_cost_grid", "eval_cost_grid"):
            if grid in sub:
                sub = dict(sub, **{grid: tuple(float(v) for v in sub[grid])})
        kwargs["cost"] = CostSettings(**sub)
    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.problem not in ("lad", "ar", "gk"):
        raise ConfigError(f"unknown problem {cfg.problem!r}")
    positive = {
        "n": cfg.n, "threads": cfg.threads, "runs": cfg.runs,
        "ga.population": cfg.ga.population, "ga.generations": cfg.ga.generations + 1,
        "monte_carlo.sampling_replications": cfg.monte_carlo.sampling_replications,
        "monte_carlo.datasets": cfg.monte_carlo.datasets,
        "monte_carlo.runs_per_dataset": cfg.monte_carlo.runs_per_dataset,
        "rate.burn_in": cfg.rate.burn_in + 1,
    }
    for name, value in positive.items():
        if value <= 0:
            raise ConfigError(f"{name} must be positive")
    if not 0.0 <= cfg.ga.crossover_rate <= 1.0:
        raise ConfigError("ga.crossover_rate must be in [0, 1]")
    if not 0.0 < cfg.ga.mutation_rate <= 1.0:
        raise ConfigError("ga.mutation_rate must be in (0, 1]")
    if not cfg.rate.candidates:
        raise ConfigError("rate.candidates must be nonempty")
    if cfg.master_seed < 0 or cfg.master_seed >= 2**64:
        raise ConfigError("master_seed must fit an unsigned 64-bit integer")
    missing = {"lad", "ar", "gk"} - set(cfg.cost.t_ratios)
    if missing:
        raise ConfigError(f"cost.t_ratios missing problems: {sorted(missing)}")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return _build(data)


def apply_scale(cfg: ExperimentConfig, scale: str) -> ExperimentConfig:
    """Switch between the affordable desk protocol and the full paper protocol."""
    if scale == "desk":
        mc = replace(cfg.monte_carlo,
                     runs_per_dataset=100,
                     datasets=10,
                     sampling_replications=DESK_SAMPLING_REPLICATIONS[cfg.problem])
        return replace(cfg, ga=replace(cfg.ga, generations=700), monte_carlo=mc)
    if scale == "paper":
        mc = replace(cfg.monte_carlo, runs_per_dataset=500, datasets=10,
                     sampling_replications=10000)
        return replace(cfg, ga=replace(cfg.ga, generations=1400), monte_carlo=mc)
    raise ConfigError(f"unknown scale {scale!r}; expected 'desk' or 'paper'")
