"""Wage-equation estimation: OLS and 2SLS fits of semilog earnings functions,
endogeneity and weak-instrument diagnostics, returns-to-education tables and
a synthetic microdata generator with known structural parameters."""

__version__ = "0.1.0"

from .iv import IvDiagnostics, IvFitResult, diagnose, first_stage_partial_f, fit_2sls, hausman_test
from .model_spec import (
    EducationLevel,
    HigherEdField,
    Microdata,
    ModelKind,
    PersonRecord,
    build_design,
    education_years,
    filter_sample,
    potential_experience,
    work_time,
)
from .regression import DesignMatrix, FitResult, fit_ols, solve_least_squares
from .returns import (
    ReturnsTable,
    annualized_rate,
    field_rates,
    incremental_rate,
    level_rates,
    relative_effect,
)
from .special import chi2_cdf, t_cdf
from .synthetic import DgpConfig, generate, monte_carlo, theoretical_ols_bias

__all__ = [
    "DesignMatrix", "DgpConfig", "EducationLevel", "FitResult", "HigherEdField",
    "IvDiagnostics", "IvFitResult", "Microdata", "ModelKind", "PersonRecord",
    "ReturnsTable", "annualized_rate", "build_design", "chi2_cdf", "diagnose",
    "education_years", "field_rates", "filter_sample", "first_stage_partial_f",
    "fit_2sls", "fit_ols", "generate", "hausman_test", "incremental_rate",
    "level_rates", "monte_carlo", "potential_experience", "relative_effect",
    "solve_least_squares", "t_cdf", "theoretical_ols_bias", "work_time",
]
