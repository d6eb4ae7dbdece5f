"""Dense least squares with classical (homoskedastic) inference.

Coefficients come from a Householder QR factorisation of the design; the
normal equations are never formed on the estimation path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InsufficientObservationsError, SingularDesignError
from .special import t_two_sided_p

#: relative threshold on |R_jj| below which a column is declared collinear
RANK_TOL = 1e-10


class DegenerateResponseWarning(UserWarning):
    """The response has zero total variation, so R-squared is set to 0."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DesignMatrix:
    """An ``n x k`` regressor matrix with one unique label per column."""

    values: np.ndarray
    column_labels: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("design values must be a 2-D array")
        labels = tuple(str(c) for c in self.column_labels)
        if len(labels) != values.shape[1]:
            raise ValueError(f"{values.shape[1]} columns but {len(labels)} labels")
        if len(set(labels)) != len(labels):
            dupes = sorted({c for c in labels if labels.count(c) > 1})
            raise ValueError(f"duplicate column labels: {dupes}")
        if values.shape[1] < 1:
            raise ValueError("design needs at least one column")
        if values.shape[0] < values.shape[1]:
            raise InsufficientObservationsError(values.shape[0], values.shape[1])
        if not np.all(np.isfinite(values)):
            bad = [labels[j] for j in range(values.shape[1]) if not np.all(np.isfinite(values[:, j]))]
            raise ValueError(f"non-finite entries in column(s): {bad}")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "column_labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.column_labels.index(label)
        except ValueError:
            raise KeyError(f"no column {label!r} in design {list(self.column_labels)}") from None

    def drop(self, labels: Sequence[str]) -> "DesignMatrix":
        keep = [j for j, c in enumerate(self.column_labels) if c not in set(labels)]
        return DesignMatrix(self.values[:, keep], tuple(self.column_labels[j] for j in keep))

    def replace_column(self, label: str, values: np.ndarray) -> "DesignMatrix":
        out = np.array(self.values)
        out[:, self.index(label)] = values
        return DesignMatrix(out, self.column_labels)

    def hstack(self, other: "DesignMatrix") -> "DesignMatrix":
        return DesignMatrix(
            np.column_stack([self.values, other.values]),
            self.column_labels + other.column_labels,
        )

    def has_intercept(self) -> bool:
        """True if some column is a nonzero constant."""
        v = self.values
        return bool(np.any(np.all(v == v[0], axis=0) & (v[0] != 0)))


@dataclass(frozen=True)
class FitResult:
    """Coefficients and classical inference for one least-squares fit."""

    coefficients: np.ndarray
    stderrs: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    covariance: np.ndarray
    sigma2: float
    r_squared: float
    adj_r_squared: float
    n: int
    k: int
    residuals: np.ndarray = field(repr=False)
    column_labels: tuple[str, ...]

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)

    def coef(self, label: str) -> float:
        return float(self.coefficients[self.column_labels.index(label)])

    def stderr(self, label: str) -> float:
        return float(self.stderrs[self.column_labels.index(label)])

    def variance(self, label: str) -> float:
        j = self.column_labels.index(label)
        return float(self.covariance[j, j])

    def to_dict(self) -> dict:
        return {
            "column_labels": list(self.column_labels),
            "coefficients": self.coefficients.tolist(),
            "stderrs": self.stderrs.tolist(),
            "t_stats": self.t_stats.tolist(),
            "p_values": self.p_values.tolist(),
            "sigma2": self.sigma2,
            "r_squared": self.r_squared,
            "adj_r_squared": self.adj_r_squared,
            "n": self.n,
            "k": self.k,
        }

    def summary(self) -> str:
        lines = [f"{'variable':<12}{'coef':>14}{'std.err':>14}{'t':>12}{'p':>10}"]
        for j, label in enumerate(self.column_labels):
            lines.append(
                f"{label:<12}{self.coefficients[j]:>14.6f}{self.stderrs[j]:>14.6f}"
                f"{self.t_stats[j]:>12.3f}{self.p_values[j]:>10.4f}"
            )
        lines.append(f"n = {self.n}, k = {self.k}, R2 = {self.r_squared:.4f}, adj R2 = {self.adj_r_squared:.4f}")
        return "\n".join(lines)


@dataclass(frozen=True)
class _QR:
    q: np.ndarray
    r: np.ndarray


def _qr(X: DesignMatrix) -> _QR:
    q, r = np.linalg.qr(X.values, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    bad = np.flatnonzero(diag < RANK_TOL * scale) if scale > 0 else np.arange(X.k)
    if bad.size:
        raise SingularDesignError([X.column_labels[j] for j in bad])
    return _QR(q, r)


def solve_least_squares(X: DesignMatrix, y) -> np.ndarray:
    """Return the coefficient vector minimising ``||y - X b||^2``.

    Raises
    ------
    SingularDesignError
        If some ``|R_jj|`` falls below ``RANK_TOL * max|R_ii|``; the error
        names the columns at which the factorisation broke down.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.n,):
        raise ValueError(f"response has shape {y.shape}, expected ({X.n},)")
    f = _qr(X)
    return solve_triangular(f.r, f.q.T @ y, lower=False)


def _r_squared(y: np.ndarray, rss: float, intercept: bool) -> float:
    if intercept:
        dev = y - y.mean()
        tss = float(dev @ dev)
    else:
        tss = float(y @ y)
    if tss == 0.0:
        warnings.warn("response has zero total sum of squares; R-squared set to 0",
                      DegenerateResponseWarning, stacklevel=3)
        return 0.0
    return 1.0 - rss / tss


def _inference(coefficients, bread_inv, residuals, y, n, k, intercept, labels) -> FitResult:
    rss = float(residuals @ residuals)
    sigma2 = rss / (n - k)
    cov = sigma2 * bread_inv
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coefficients / se
    df = n - k
    p = np.array([t_two_sided_p(float(v), df) for v in t])
    r2 = _r_squared(y, rss, intercept)
    adj = 1.0 - (1.0 - r2) * ((n - 1) if intercept else n) / df
    return FitResult(
        coefficients=_frozen(coefficients),
        stderrs=_frozen(se),
        t_stats=_frozen(t),
        p_values=_frozen(p),
        covariance=_frozen(cov),
        sigma2=sigma2,
        r_squared=r2,
        adj_r_squared=adj,
        n=n,
        k=k,
        residuals=_frozen(residuals),
        column_labels=tuple(labels),
    )


def _inv_from_r(r: np.ndarray) -> np.ndarray:
    # (X'X)^-1 = R^-1 R^-T
    r_inv = solve_triangular(r, np.eye(r.shape[0]), lower=False)
    return r_inv @ r_inv.T


def fit_ols(X: DesignMatrix, y) -> FitResult:
    """Ordinary least squares with classical standard errors.

    ``sigma2 = RSS / (n - k)``, ``cov = sigma2 (X'X)^-1`` and p-values are
    two-sided from the t distribution with ``n - k`` degrees of freedom.
    R-squared is centred when the design contains an intercept.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.n,):
        raise ValueError(f"response has shape {y.shape}, expected ({X.n},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")
    if X.n <= X.k:
        raise InsufficientObservationsError(X.n, X.k)
    f = _qr(X)
    beta = solve_triangular(f.r, f.q.T @ y, lower=False)
    resid = y - X.values @ beta
    return _inference(beta, _inv_from_r(f.r), resid, y, X.n, X.k, X.has_intercept(), X.column_labels)


def fit_projected(X_hat: DesignMatrix, X: DesignMatrix, y) -> FitResult:
    """Regress ``y`` on ``X_hat`` but take residuals against ``X``.

    This is the second stage of two-stage least squares: coefficients solve
    the projected problem, while ``sigma2`` uses ``y - X b`` with the
    original regressors.
    """
    y = np.asarray(y, dtype=np.float64)
    if X_hat.n <= X_hat.k:
        raise InsufficientObservationsError(X_hat.n, X_hat.k)
    f = _qr(X_hat)
    beta = solve_triangular(f.r, f.q.T @ y, lower=False)
    resid = y - X.values @ beta
    return _inference(beta, _inv_from_r(f.r), resid, y, X.n, X.k, X.has_intercept(), X.column_labels)
