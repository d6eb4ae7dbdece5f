"""Synthetic microdata with a known wage equation and endogenous schooling.

A latent standard-normal factor ``A`` enters both the schooling equation
(loading ``schooling.ability``) and the log-wage equation (loading
``wage.ability_loading``) but is never shown to the estimators. Urban
residence shifts schooling and nothing else, so it is a valid instrument.

Potential experience is drawn independently of schooling and age is derived
from it (``age = EDU + EXP + 6``). Drawing age first would tie experience to
schooling, and hence to ``A``, making experience endogenous too.

All randomness comes from a PCG64 generator seeded by the config.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, DegenerateFitError, InputError, MincerlabError, SingularDesignError
from .iv import WEAK_F_THRESHOLD, HausmanClampWarning, diagnose, fit_2sls
from .model_spec import (
    FIELDS,
    LEVELS,
    NO_FIELD,
    EducationLevel,
    Microdata,
    ModelKind,
    build_design,
    instrument_matrix,
)
from .regression import fit_ols
from .special import t_two_sided_p

_LEVEL_YEARS = np.array([lvl.years for lvl in LEVELS], dtype=np.float64)
_HIGHER_CODES = np.array([i for i, lvl in enumerate(LEVELS) if lvl.is_higher])
MIN_YEARS = float(_LEVEL_YEARS.min())
MAX_YEARS = float(_LEVEL_YEARS.max())


@dataclass(frozen=True)
class WageParams:
    """Log-wage equation. Slopes default to the published 2SLS estimates."""

    intercept: float = 6.0
    education: float = 0.1610
    experience: float = 0.0258
    experience_sq: float = -0.0002
    gender: float = 0.0912
    married: float = -0.0128
    wtime: float = 0.0010
    big_town: float = 0.1014
    ability_loading: float = -0.22
    noise_sd: float = 0.6


@dataclass(frozen=True)
class SchoolingParams:
    """Latent schooling years ``intercept + urban*URBAN + ability*A + noise_sd*e``."""

    intercept: float = 10.5
    urban: float = 2.0
    ability: float = 2.0
    noise_sd: float = 2.5


@dataclass(frozen=True)
class PopulationParams:
    p_male: float = 0.52
    p_married: float = 0.55
    p_urban: float = 0.54
    p_bigtown_given_urban: float = 0.45
    age_min: int = 15
    age_max: int = 64
    hours_mean: float = 40.0
    hours_sd: float = 6.0
    hours_min: float = 10.0
    hours_max: float = 80.0
    p_full_year: float = 0.8
    weeks_min: int = 10
    # Technical, Science, Economics, Law, Medicine, Arts
    field_probs: tuple[float, ...] = (0.25, 0.12, 0.28, 0.13, 0.10, 0.12)


@dataclass(frozen=True)
class DgpConfig:
    n: int = 10_000
    seed: int = 0
    wage: WageParams = field(default_factory=WageParams)
    schooling: SchoolingParams = field(default_factory=SchoolingParams)
    population: PopulationParams = field(default_factory=PopulationParams)

    def __post_init__(self):
        validate_config(self)

    def updated(self, **changes) -> "DgpConfig":
        """Copy with fields replaced; nested fields use ``block__name`` keys.

        >>> DgpConfig().updated(n=500, wage__ability_loading=0.0).wage.ability_loading
        0.0
        """
        top: dict[str, Any] = {}
        nested: dict[str, dict[str, Any]] = {}
        for key, value in changes.items():
            if "__" in key:
                block, name = key.split("__", 1)
                nested.setdefault(block, {})[name] = value
            else:
                top[key] = value
        for block, vals in nested.items():
            if block not in ("wage", "schooling", "population"):
                raise ConfigError(block, "unknown section")
            top[block] = replace(getattr(self, block), **vals)
        return replace(self, **top)

    @property
    def experience_range(self) -> tuple[int, int]:
        """Experience values that keep every schooling level inside the age range."""
        p = self.population
        return int(p.age_min - MIN_YEARS - 6), int(p.age_max - MAX_YEARS - 6)

    def truth(self, label: str) -> float:
        w = self.wage
        return {
            "INTERCEPT": w.intercept, "EDU": w.education, "EXP": w.experience,
            "EXP2": w.experience_sq, "GENDER": w.gender, "MARRIED": w.married,
            "WTIME": w.wtime, "BIG_TOWN": w.big_town,
        }[label]


def _check_prob(name, p):
    if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
        raise ConfigError(name, f"must be a probability in [0, 1], got {p!r}")


def _check_real(name, v, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(name, f"must be a finite number, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(name, f"must be >= 0, got {v!r}")


def validate_config(cfg: DgpConfig) -> None:
    if isinstance(cfg.n, bool) or not isinstance(cfg.n, int) or cfg.n < 0:
        raise ConfigError("n", f"must be a non-negative integer, got {cfg.n!r}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", f"must be an integer in [0, 2**64), got {cfg.seed!r}")
    for f in fields(WageParams):
        _check_real(f"wage.{f.name}", getattr(cfg.wage, f.name), nonneg=f.name == "noise_sd")
    for f in fields(SchoolingParams):
        _check_real(f"schooling.{f.name}", getattr(cfg.schooling, f.name), nonneg=f.name == "noise_sd")
    p = cfg.population
    for name in ("p_male", "p_married", "p_urban", "p_bigtown_given_urban", "p_full_year"):
        _check_prob(f"population.{name}", getattr(p, name))
    for name in ("hours_mean", "hours_sd", "hours_min", "hours_max"):
        _check_real(f"population.{name}", getattr(p, name), nonneg=True)
    if not p.hours_min <= p.hours_max <= 168:
        raise ConfigError("population.hours_max", "need hours_min <= hours_max <= 168")
    for name in ("age_min", "age_max", "weeks_min"):
        v = getattr(p, name)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"population.{name}", f"must be an integer, got {v!r}")
    if not 0 <= p.weeks_min <= 52:
        raise ConfigError("population.weeks_min", "must lie in [0, 52]")
    if len(p.field_probs) != len(FIELDS):
        raise ConfigError("population.field_probs", f"needs {len(FIELDS)} entries")
    for v in p.field_probs:
        _check_prob("population.field_probs", v)
    if abs(sum(p.field_probs) - 1.0) > 1e-9:
        raise ConfigError("population.field_probs", f"must sum to 1, got {sum(p.field_probs)}")
    lo, hi = cfg.experience_range
    if lo < 0 or hi < lo:
        raise ConfigError(
            "population.age_min",
            f"age range [{p.age_min}, {p.age_max}] cannot host every schooling level "
            f"(need age_min >= {int(MIN_YEARS) + 6} and age_max - age_min >= {int(MAX_YEARS - MIN_YEARS)})",
        )


@dataclass(frozen=True)
class SyntheticSample:
    data: Microdata
    ability: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.data)

    def to_records(self):
        return self.data.to_records()


def nearest_level(latent_years: np.ndarray) -> np.ndarray:
    """Index of the level whose schooling years are closest (ties go to the shorter level)."""
    clamped = np.clip(latent_years, MIN_YEARS, MAX_YEARS)
    return np.argmin(np.abs(clamped[:, None] - _LEVEL_YEARS[None, :]), axis=1)


def generate(config: DgpConfig, seed: int | None = None) -> SyntheticSample:
    """Draw ``config.n`` people. Pure function of ``(config, seed)``.

    ``seed`` overrides ``config.seed``; Monte Carlo replications use it.
    """
    seed = config.seed if seed is None else int(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    n = config.n
    w, s, p = config.wage, config.schooling, config.population

    ability = rng.standard_normal(n)
    urban = rng.random(n) < p.p_urban
    big_town = urban & (rng.random(n) < p.p_bigtown_given_urban)
    latent = s.intercept + s.urban * urban + s.ability * ability + s.noise_sd * rng.standard_normal(n)
    level = nearest_level(latent)
    edu = _LEVEL_YEARS[level]

    male = rng.random(n) < p.p_male
    married = rng.random(n) < p.p_married
    lo, hi = config.experience_range
    exp = rng.integers(lo, hi, endpoint=True, size=n).astype(np.float64)
    age = (edu + exp + 6).astype(np.int64)

    hours = np.clip(np.round(rng.normal(p.hours_mean, p.hours_sd, n)), p.hours_min, p.hours_max)
    full_year = rng.random(n) < p.p_full_year
    part_weeks = rng.integers(min(p.weeks_min, 51), 51, endpoint=True, size=n)
    weeks = np.where(full_year, 52, part_weeks).astype(np.float64)

    field_draw = rng.choice(len(FIELDS), size=n, p=np.asarray(p.field_probs, dtype=np.float64))
    he_field = np.where(np.isin(level, _HIGHER_CODES), field_draw, NO_FIELD).astype(np.int64)

    log_wage = (
        w.intercept + w.education * edu + w.experience * exp + w.experience_sq * exp * exp
        + w.gender * male + w.married * married + w.wtime * hours * weeks + w.big_town * big_town
        + w.ability_loading * ability + w.noise_sd * rng.standard_normal(n)
    )
    data = Microdata(
        age=age,
        male=male,
        married=married,
        hours_per_week=hours,
        weeks_worked=weeks,
        big_town=big_town,
        urban=urban,
        edu_level=level.astype(np.int64),
        he_field=he_field,
        gross_income=np.exp(log_wage),
        employed=np.ones(n, dtype=bool),
    )
    return SyntheticSample(data, ability, seed)


def _oracle_seed(config: DgpConfig) -> int:
    return int(np.random.SeedSequence([config.seed, 0x0B1A5]).generate_state(1, np.uint64)[0])


def schooling_ability_slope(config: DgpConfig, n_sim: int = 400_000) -> float:
    """Population coefficient on EDU when ability is projected on the base regressors.

    Estimated from a large simulated sample of the covariates; the wage
    equation plays no part.
    """
    sample = generate(config.updated(n=n_sim), seed=_oracle_seed(config))
    X, _ = build_design(sample.data, ModelKind.BASE)
    if np.ptp(X.column("EDU")) == 0:
        raise DegenerateFitError("schooling has zero variance under this config")
    try:
        return fit_ols(X, sample.ability).coef("EDU")
    except SingularDesignError as exc:
        raise DegenerateFitError(f"cannot separate schooling from the other regressors: {exc}") from exc


def theoretical_ols_bias(config: DgpConfig, n_sim: int = 400_000) -> float:
    """Large-sample bias of the OLS schooling coefficient from the omitted factor.

    Omitted-variable algebra: the wage loading on ability times the
    partial regression slope of ability on schooling, holding the other
    base regressors fixed.
    """
    return config.wage.ability_loading * schooling_ability_slope(config, n_sim)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MINCERLAB_THREADS", "1")))
    except ValueError:
        return 1


def replication_seeds(master_seed: int, reps: int) -> list[int]:
    """Independent 64-bit seeds, one per replication, derived from ``master_seed``."""
    children = np.random.SeedSequence(master_seed).spawn(reps)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


@dataclass(frozen=True)
class Replication:
    seed: int
    estimate: float = math.nan
    stderr: float = math.nan
    ols_estimate: float = math.nan
    hausman_p: float = math.nan
    first_stage_f: float = math.nan
    error: str | None = None


@dataclass(frozen=True)
class MonteCarloSummary:
    estimator: str
    target: str
    truth: float
    reps: int
    alpha: float
    replications: tuple[Replication, ...]
    df_resid: int = 1

    @property
    def ok(self) -> tuple[Replication, ...]:
        return tuple(r for r in self.replications if r.error is None)

    @property
    def failures(self) -> list[tuple[int, str]]:
        return [(i, r.error) for i, r in enumerate(self.replications) if r.error is not None]

    @property
    def estimates(self) -> np.ndarray:
        return np.array([r.estimate for r in self.ok])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([r.stderr for r in self.ok])

    @property
    def mean(self) -> float:
        return float(np.mean(self.estimates))

    @property
    def sd(self) -> float:
        est = self.estimates
        return float(np.std(est, ddof=1)) if est.size > 1 else 0.0

    @property
    def mean_stderr(self) -> float:
        return float(np.mean(self.stderrs))

    @property
    def mean_ols(self) -> float:
        return float(np.mean([r.ols_estimate for r in self.ok]))

    def _rate(self, flags) -> float:
        flags = list(flags)
        return float(np.mean(flags)) if flags else math.nan

    @property
    def rejection_rate(self) -> float:
        """Share of replications whose t test rejects the planted value at ``alpha``."""
        return self._rate(
            r.stderr > 0 and t_two_sided_p((r.estimate - self.truth) / r.stderr, self.df_resid) < self.alpha
            for r in self.ok
        )

    @property
    def hausman_rejection_rate(self) -> float:
        return self._rate(r.hausman_p < self.alpha for r in self.ok if not math.isnan(r.hausman_p))

    @property
    def weak_instrument_rate(self) -> float:
        return self._rate(r.first_stage_f < WEAK_F_THRESHOLD for r in self.ok if not math.isnan(r.first_stage_f))

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator, "target": self.target, "truth": self.truth,
            "reps": self.reps, "failed": len(self.failures), "alpha": self.alpha,
            "mean": self.mean, "sd": self.sd, "mean_stderr": self.mean_stderr,
            "rejection_rate": self.rejection_rate,
            "hausman_rejection_rate": self.hausman_rejection_rate,
            "weak_instrument_rate": self.weak_instrument_rate,
            "failures": [{"rep": i, "error": e} for i, e in self.failures],
        }


def _replicate(config: DgpConfig, seed: int, estimator: str, target: str, instrument: str) -> Replication:
    try:
        data = generate(config, seed=seed).data
        X, y = build_design(data, ModelKind.BASE)
        ols = fit_ols(X, y)
        if estimator == "ols":
            return Replication(seed, ols.coef(target), ols.stderr(target), ols.coef(target))
        iv = fit_2sls(X, y, "EDU", instrument_matrix(data, [instrument]))
        diag = diagnose(ols, iv)
        return Replication(seed, iv.coef(target), iv.stderr(target), ols.coef(target),
                           diag.hausman_p, diag.first_stage_partial_f)
    except (MincerlabError, np.linalg.LinAlgError) as exc:
        return Replication(seed, error=f"{type(exc).__name__}: {exc}")


def monte_carlo(
    config: DgpConfig,
    reps: int,
    estimator: str = "ols",
    target: str = "EDU",
    *,
    alpha: float = 0.05,
    instrument: str = "urban",
    workers: int | None = None,
) -> MonteCarloSummary:
    """Sampling distribution of one coefficient over seeded replications.

    Replication ``i`` uses the ``i``-th seed spawned from ``config.seed``,
    so results do not depend on ``workers``. A failing replication is
    recorded in the summary rather than raised.
    """
    if reps < 1:
        raise InputError("reps must be >= 1")
    if estimator not in ("ols", "2sls"):
        raise InputError(f"estimator must be 'ols' or '2sls', got {estimator!r}")
    truth = config.truth(target)
    seeds = replication_seeds(config.seed, reps)
    workers = default_workers() if workers is None else workers

    def run(seed):
        return _replicate(config, seed, estimator, target, instrument)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HausmanClampWarning)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reps_out = tuple(pool.map(run, seeds))
        else:
            reps_out = tuple(map(run, seeds))
    df_resid = max(config.n - len(ModelKind.BASE.columns), 1)
    return MonteCarloSummary(estimator, target, truth, reps, alpha, reps_out, df_resid)


# -- config files ---------------------------------------------------------------

_SECTIONS = {"wage": WageParams, "schooling": SchoolingParams, "population": PopulationParams}


def config_from_dict(raw: dict) -> DgpConfig:
    """Build a config from parsed TOML; unknown keys are errors."""
    top: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(key, "must be a table")
            cls = _SECTIONS[key]
            known = {f.name for f in fields(cls)}
            for name in value:
                if name not in known:
                    raise ConfigError(f"{key}.{name}", "unknown field")
            vals = dict(value)
            if "field_probs" in vals:
                if not isinstance(vals["field_probs"], list):
                    raise ConfigError(f"{key}.field_probs", "must be an array")
                vals["field_probs"] = tuple(vals["field_probs"])
            top[key] = cls(**vals)
        elif key in ("n", "seed"):
            top[key] = value
        else:
            raise ConfigError(key, "unknown field")
    return DgpConfig(**top)


def load_config(path: str | Path) -> DgpConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"config file {path} is not valid TOML: {exc}") from None
    return config_from_dict(raw)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_toml(cfg: DgpConfig) -> str:
    lines = [f"n = {cfg.n}", f"seed = {cfg.seed}"]
    for section in _SECTIONS:
        lines.append("")
        lines.append(f"[{section}]")
        block = getattr(cfg, section)
        for f in fields(block):
            lines.append(f"{f.name} = {_toml_value(getattr(block, f.name))}")
    return "\n".join(lines) + "\n"


EXOGENOUS = {"wage__ability_loading": 0.0}
WEAK_INSTRUMENT = {"schooling__urban": 0.0}
