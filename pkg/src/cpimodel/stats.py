"""Correlation matrices with lag scanning, ADF unit-root and residual cointegration tests."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .data import MonthlySeries, lag_shift, overlap
from .errors import (
    DegenerateSeries,
    DegenerateVariance,
    InsufficientOverlap,
    StatsError,
    TooShort,
)

log = logging.getLogger(__name__)

MIN_CC_OVERLAP = 24
MIN_ADF_OBS = 30
MIN_COINT_OVERLAP = 60

# MacKinnon (2010) response-surface coefficients, constant-only regression:
# crit(T) = t0 + t1/T + t2/T**2 + t3/T**3. Keys: number of I(1) variables.
_TAU_C = {
    1: {
        1: (-3.43035, -6.5393, -16.786, -79.433),
        5: (-2.86154, -2.8903, -4.234, -40.040),
        10: (-2.56677, -1.5384, -2.809, 0.0),
    },
    2: {
        1: (-3.89644, -10.9519, -33.527, 0.0),
        5: (-3.33613, -6.1101, -6.823, 0.0),
        10: (-3.04445, -4.2412, -2.720, 0.0),
    },
}
LEVELS = (1, 5, 10)


def critical_values(n_obs: int | float, n_vars: int = 1) -> dict[int, float]:
    """Finite-sample critical values at 1/5/10 percent for a constant-only test.

    ``n_vars=1`` is the plain Dickey-Fuller case; ``n_vars=2`` the residual-based
    two-variable cointegration case. ``n_obs=math.inf`` gives asymptotic values.
    """
    table = _TAU_C[n_vars]
    out = {}
    for level, (t0, t1, t2, t3) in table.items():
        if math.isinf(n_obs):
            out[level] = t0
        else:
            x = 1.0 / n_obs
            out[level] = t0 + t1 * x + t2 * x * x + t3 * x**3
    return out


# ----------------------------------------------------------- correlation


def pearson_cc(a: MonthlySeries, b: MonthlySeries, min_overlap: int = MIN_CC_OVERLAP) -> float:
    """Pearson coefficient over the calendar-aligned overlap."""
    span = overlap(a, b)
    if span is None or span[1] - span[0] + 1 < min_overlap:
        got = 0 if span is None else span[1] - span[0] + 1
        raise InsufficientOverlap(f"overlap of {got} months, need {min_overlap}")
    x = a.window(*span) - a.window(*span).mean()
    y = b.window(*span) - b.window(*span).mean()
    sxx = float(x @ x)
    syy = float(y @ y)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateVariance("constant series over the overlap")
    r = float(x @ y) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def lag_scan_cc(
    a: MonthlySeries,
    b: MonthlySeries,
    max_shift: int = 11,
    min_overlap: int = MIN_CC_OVERLAP,
) -> tuple[float, int]:
    """Signed coefficient of largest magnitude over shifts of ``b`` in ±max_shift.

    Shift s pairs ``a(m)`` with ``b(m - s)``. Shifts whose overlap is too short
    are skipped. Ties in |CC| go to the smaller |s|, then to the negative s.
    """
    best: tuple[float, int] | None = None
    best_rank = None
    for s in range(-max_shift, max_shift + 1):
        try:
            r = pearson_cc(a, lag_shift(b, s), min_overlap)
        except InsufficientOverlap:
            continue
        rank = (-abs(r), abs(s), s)
        if best_rank is None or rank < best_rank:
            best, best_rank = (r, s), rank
    if best is None:
        raise InsufficientOverlap(f"no shift within ±{max_shift} has {min_overlap} months of overlap")
    return best


@dataclass
class CorrelationMatrix:
    labels: list[str]
    values: np.ndarray
    lag_max: np.ndarray | None = None  # signed CC maximising |CC| over shifts
    lag_at_max: np.ndarray | None = None
    unavailable: dict[tuple[int, int], str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(m):
            return [[None if np.isnan(v) else float(v) for v in row] for row in m]

        out = {"labels": list(self.labels), "values": clean(self.values)}
        if self.lag_max is not None:
            out["lag_max"] = clean(self.lag_max)
            out["lag_at_max"] = [[int(v) for v in row] for row in self.lag_at_max]
        if self.unavailable:
            out["unavailable"] = {f"{self.labels[i]}/{self.labels[j]}": msg for (i, j), msg in sorted(self.unavailable.items())}
        return out


def correlation_matrix(
    series: Sequence[tuple[str, MonthlySeries]],
    scan: bool = False,
    max_shift: int = 11,
) -> CorrelationMatrix:
    """Pairwise Pearson matrix; with ``scan`` also the lag-maximised coefficients.

    A failing cell is NaN and listed in ``unavailable``; the diagonal is 1.
    """
    labels = [name for name, _ in series]
    k = len(series)
    vals = np.eye(k)
    lm = np.eye(k) if scan else None
    lag_at = np.zeros((k, k), dtype=int) if scan else None
    bad: dict[tuple[int, int], str] = {}
    for i in range(k):
        for j in range(i + 1, k):
            a, b = series[i][1], series[j][1]
            try:
                vals[i, j] = vals[j, i] = pearson_cc(a, b)
            except StatsError as exc:
                vals[i, j] = vals[j, i] = np.nan
                bad[(i, j)] = str(exc)
            if scan:
                try:
                    r, s = lag_scan_cc(a, b, max_shift)
                    lm[i, j] = lm[j, i] = r
                    lag_at[i, j], lag_at[j, i] = s, -s
                except StatsError as exc:
                    lm[i, j] = lm[j, i] = np.nan
                    bad.setdefault((i, j), str(exc))
    return CorrelationMatrix(labels, vals, lm, lag_at, bad)


# ------------------------------------------------------------------ ADF


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag_order: int
    n_obs: int
    critical_values: dict[int, float]
    level: int
    reject_unit_root: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "lag_order": self.lag_order,
            "n_obs": self.n_obs,
            "critical_values": {f"{k}%": v for k, v in self.critical_values.items()},
            "level": self.level,
            "reject_unit_root": self.reject_unit_root,
        }


def auto_lag(n: int) -> int:
    """Schwert rule floor(12 * (n/100) ** 0.25)."""
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(y: np.ndarray, p: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Last ``n`` rows of the ADF regression with ``p`` lagged differences."""
    dy = np.diff(y)
    m = dy.shape[0]
    cols = [y[m - n : m]]  # y_{t-1}
    for i in range(1, p + 1):
        cols.append(dy[m - n - i : m - i])
    cols.append(np.ones(n))
    return np.column_stack(cols), dy[m - n :]


def _ols(X: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
    Q, R = np.linalg.qr(X)
    beta = np.linalg.solve(R, Q.T @ target)
    resid = target - X @ beta
    return beta, float(resid @ resid), R


def _adf_stat(y: np.ndarray, p: int) -> tuple[float, int]:
    n = y.shape[0] - 1 - p
    X, target = _adf_design(y, p, n)
    beta, ssr, R = _ols(X, target)
    sigma2 = ssr / (n - X.shape[1])
    # se(beta_0) = sigma * || first row of R^{-1} ||
    rinv = np.linalg.solve(R, np.eye(R.shape[0]))
    se = math.sqrt(sigma2 * float(rinv[0] @ rinv[0]))
    return float(beta[0] / se), n


def aic_lag(y: np.ndarray, max_lag: int) -> int:
    """Lag order in 0..max_lag minimising AIC on a common sample.

    All orders are fitted on the last ``T - 1 - max_lag`` observations so
    their likelihoods are comparable; ties go to the smaller order.
    """
    n = y.shape[0] - 1 - max_lag
    best, best_aic = 0, math.inf
    for p in range(max_lag + 1):
        X, target = _adf_design(y, p, n)
        _, ssr, _ = _ols(X, target)
        llf = -0.5 * n * (math.log(2 * math.pi) + math.log(ssr / n) + 1.0)
        aic = -2.0 * llf + 2.0 * X.shape[1]
        if aic < best_aic:
            best, best_aic = p, aic
    return best


def adf_test(
    s: MonthlySeries | np.ndarray,
    level: int = 5,
    lag_order: int | str = "auto",
    n_vars: int = 1,
) -> AdfResult:
    """Augmented Dickey-Fuller test with a constant and no trend.

    Regresses Δy_t on y_{t-1}, p lagged differences and a constant; the
    statistic is the t-ratio on y_{t-1}. ``lag_order="auto"`` uses
    :func:`auto_lag` of the series length; ``"aic"`` picks the order by AIC
    with that value as the cap. ``n_vars=2`` switches to the residual-based
    cointegration critical values.
    """
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    y = np.asarray(s.values if isinstance(s, MonthlySeries) else s, dtype=np.float64)
    T = y.shape[0]
    p = auto_lag(T) if lag_order in ("auto", "aic") else int(lag_order)
    if p < 0:
        raise ValueError("lag order must be non-negative")
    if T - 1 - p < MIN_ADF_OBS:
        raise TooShort(f"{T} values with {p} lags leave {T - 1 - p} observations, need {MIN_ADF_OBS}")
    if np.ptp(y) == 0.0:
        raise DegenerateSeries("series is constant")
    if lag_order == "aic":
        p = aic_lag(y, p)
    stat, n_obs = _adf_stat(y, p)
    crit = critical_values(n_obs, n_vars)
    return AdfResult(stat, p, n_obs, crit, level, bool(stat < crit[level]))


@dataclass(frozen=True)
class CointegrationResult:
    adf: AdfResult
    cointegrated: bool
    slope: float
    intercept: float
    n_obs: int
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "cointegrated": self.cointegrated,
            "slope": self.slope,
            "intercept": self.intercept,
            "n_obs": self.n_obs,
            "residual_adf": self.adf.to_dict(),
            "warnings": list(self.warnings),
        }


def engle_granger_test(
    actual: MonthlySeries,
    predicted: MonthlySeries,
    level: int = 5,
    lag_order: int | str = "aic",
) -> CointegrationResult:
    """Residual-based cointegration test of actual on predicted.

    Regresses actual on predicted with an intercept and runs :func:`adf_test` on
    the residuals against two-variable critical values. The residual lag order
    defaults to AIC selection; a fixed long lag costs most of the power when
    the residuals are close to white noise. A warning (not an
    error) is recorded when either input already looks stationary.
    """
    span = overlap(actual, predicted)
    if span is None or span[1] - span[0] + 1 < MIN_COINT_OVERLAP:
        raise InsufficientOverlap(f"cointegration test needs {MIN_COINT_OVERLAP} overlapping months")
    y = np.asarray(actual.window(*span))
    x = np.asarray(predicted.window(*span))
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef

    warnings = []
    for name, v in (("actual", y), ("predicted", x)):
        try:
            if adf_test(v, level, lag_order).reject_unit_root:
                msg = f"{name} series rejects a unit root on its own; cointegration is not meaningful"
                log.warning(msg)
                warnings.append(msg)
        except StatsError:
            pass
    res_adf = adf_test(resid, level, lag_order, n_vars=2)
    return CointegrationResult(
        adf=res_adf,
        cointegrated=res_adf.reject_unit_root,
        slope=float(coef[0]),
        intercept=float(coef[1]),
        n_obs=int(y.shape[0]),
        warnings=tuple(warnings),
    )
