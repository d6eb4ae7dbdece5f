"""Two-stage least squares with one endogenous regressor, plus diagnostics.

The second-stage variance uses residuals computed with the *original*
endogenous column; running the literal two-step recipe through plain OLS
(available as ``naive_stderrs=True``) understates the standard errors
whenever the first stage is imperfect.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, InputError
from .regression import DesignMatrix, FitResult, fit_ols, fit_projected
from .special import chi2_sf

WEAK_F_THRESHOLD = 10.0


class HausmanClampWarning(UserWarning):
    """The estimated covariance difference was not positive; statistic set to 0."""


@dataclass(frozen=True)
class IvFitResult:
    second_stage: FitResult
    first_stage: FitResult
    first_stage_restricted: FitResult
    endogenous_label: str
    instrument_labels: tuple[str, ...]
    naive_stderrs: bool = False

    def coef(self, label: str) -> float:
        return self.second_stage.coef(label)

    def stderr(self, label: str) -> float:
        return self.second_stage.stderr(label)


def fit_2sls(
    X: DesignMatrix,
    y,
    endogenous: str,
    instruments: DesignMatrix,
    *,
    naive_stderrs: bool = False,
) -> IvFitResult:
    """Two-stage least squares.

    Parameters
    ----------
    X : DesignMatrix
        Second-stage regressors, including the endogenous column.
    y : array_like
        Response.
    endogenous : str
        Label of the endogenous column in ``X``.
    instruments : DesignMatrix
        Excluded instruments. Their labels must not collide with the
        exogenous columns of ``X``.
    naive_stderrs : bool
        Compute ``sigma2`` from second-stage residuals with fitted values
        in place of the endogenous column, as plain OLS on the second stage
        would. Only useful for comparison.
    """
    y = np.asarray(y, dtype=np.float64)
    if endogenous not in X.column_labels:
        raise InputError(f"endogenous column {endogenous!r} not in design")
    if instruments.n != X.n:
        raise InputError(f"instrument rows ({instruments.n}) differ from design rows ({X.n})")
    if instruments.k < 1:
        raise InputError("under-identified: need at least one excluded instrument")
    exog = X.drop([endogenous])
    clash = sorted(set(instruments.column_labels) & set(exog.column_labels))
    if clash:
        raise InputError(f"instrument(s) {clash} already enter the second stage as exogenous regressors")
    Z = exog.hstack(instruments)
    x_endog = X.column(endogenous)
    first = fit_ols(Z, x_endog)
    restricted = fit_ols(exog, x_endog)
    X_hat = X.replace_column(endogenous, x_endog - first.residuals)
    if naive_stderrs:
        second = fit_ols(X_hat, y)
    else:
        second = fit_projected(X_hat, X, y)
    return IvFitResult(second, first, restricted, endogenous, instruments.column_labels, naive_stderrs)


@dataclass(frozen=True)
class HausmanResult:
    stat: float
    df: int
    p_value: float
    clamped: bool
    scope: str

    def to_dict(self) -> dict:
        return {"stat": self.stat, "df": self.df, "p_value": self.p_value,
                "clamped": self.clamped, "scope": self.scope}


def _check_same_model(ols: FitResult, iv: FitResult) -> None:
    if ols.n != iv.n:
        raise InputError(f"fits use different samples (n={ols.n} vs n={iv.n})")
    if ols.column_labels != iv.column_labels:
        raise InputError(
            f"fits use different columns: {list(ols.column_labels)} vs {list(iv.column_labels)}"
        )


def hausman_test(ols: FitResult, iv: IvFitResult, scope: str = "endogenous") -> HausmanResult:
    """Hausman contrast of OLS (efficient under exogeneity) against 2SLS.

    ``scope="endogenous"`` compares the endogenous coefficient alone
    (``df = 1``). ``scope="full"`` uses the whole coefficient vector with a
    pseudo-inverse of the covariance difference; ``df`` is the number of
    positive eigenvalues retained. A non-positive difference gives a
    statistic of 0 with ``clamped=True`` and a :class:`HausmanClampWarning`.
    """
    second = iv.second_stage
    _check_same_model(ols, second)
    d = second.coefficients - ols.coefficients
    if scope == "endogenous":
        j = ols.column_labels.index(iv.endogenous_label)
        v = second.covariance[j, j] - ols.covariance[j, j]
        if v <= 0:
            warnings.warn("Hausman variance difference is not positive; statistic set to 0",
                          HausmanClampWarning, stacklevel=2)
            return HausmanResult(0.0, 1, 1.0, True, scope)
        stat = float(d[j] ** 2 / v)
        return HausmanResult(stat, 1, chi2_sf(stat, 1), False, scope)
    if scope != "full":
        raise ValueError(f"scope must be 'endogenous' or 'full', got {scope!r}")
    D = second.covariance - ols.covariance
    # scale to unit diagonal so the eigenvalue cutoff is unit-free
    s = np.sqrt(np.abs(np.diag(D)))
    s[s == 0] = 1.0
    Ds = D / np.outer(s, s)
    w, V = np.linalg.eigh(0.5 * (Ds + Ds.T))
    keep = w > 1e-8 * max(np.max(np.abs(w)), np.finfo(float).tiny)
    df = int(keep.sum())
    if df == 0:
        warnings.warn("covariance difference has no positive eigenvalues; statistic set to 0",
                      HausmanClampWarning, stacklevel=2)
        return HausmanResult(0.0, 0, 1.0, True, scope)
    u = (V[:, keep].T @ (d / s))
    stat = float(np.sum(u * u / w[keep]))
    clamped = bool(np.any(w < -1e-8 * np.max(np.abs(w))))
    if clamped:
        warnings.warn("covariance difference is not positive semi-definite; negative directions dropped",
                      HausmanClampWarning, stacklevel=2)
    return HausmanResult(stat, df, chi2_sf(stat, df), clamped, scope)


def first_stage_partial_f(full: FitResult, restricted: FitResult, q: int) -> float:
    """F statistic for excluding ``q`` instruments from the first stage."""
    if full.n != restricted.n:
        raise InputError("full and restricted first stages use different samples")
    if not set(restricted.column_labels) <= set(full.column_labels):
        raise InputError("restricted first stage must use a subset of the full model's columns")
    if full.k - restricted.k != q:
        raise InputError(f"models differ by {full.k - restricted.k} columns, but q={q}")
    rss_u = full.rss
    if rss_u == 0.0:
        raise DegenerateFitError("first stage fits perfectly (RSS = 0); partial F undefined")
    f = ((restricted.rss - rss_u) / q) / (rss_u / full.df_resid)
    return max(f, 0.0)


@dataclass(frozen=True)
class IvDiagnostics:
    hausman_stat: float
    hausman_df: int
    hausman_p: float
    hausman_clamped: bool
    first_stage_partial_f: float
    weak_instrument: bool

    def to_dict(self) -> dict:
        return {
            "hausman": {"stat": self.hausman_stat, "df": self.hausman_df,
                        "p_value": self.hausman_p, "clamped": self.hausman_clamped},
            "first_stage": {"partial_f": self.first_stage_partial_f,
                            "weak_instrument": self.weak_instrument,
                            "threshold": WEAK_F_THRESHOLD},
        }


def diagnose(ols: FitResult, iv: IvFitResult, scope: str = "endogenous") -> IvDiagnostics:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HausmanClampWarning)
        h = hausman_test(ols, iv, scope)
    f = first_stage_partial_f(iv.first_stage, iv.first_stage_restricted, len(iv.instrument_labels))
    return IvDiagnostics(h.stat, h.df, h.p_value, h.clamped, f, f < WEAK_F_THRESHOLD)
