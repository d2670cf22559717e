"""Least-squares fit of a price on two lagged CPIs, a linear trend and a constant.

    price(m) = b1*CPI1(m - lag1) + b2*CPI2(m - lag2) + c*(years since 2000) + d + e(m)

All fits go through :func:`solve_designs`, a batched Householder-QR solver, so
a single ``fit_candidate`` call and one row of an exhaustive search share the
same arithmetic.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .data import MonthKey, MonthlySeries, lookup, overlap, trend_time, trend_vector
from .errors import (
    DegenerateVariance,
    InsufficientData,
    InsufficientOverlap,
    MissingMonth,
    RankDeficient,
)

N_COEF = 4
RCOND_MIN = 1e-10
DEFAULT_MIN_OBS = 60


@dataclass(frozen=True)
class ModelSpec:
    code1: str
    lag1: int
    code2: str
    lag2: int
    b1: float
    b2: float
    c: float
    d: float

    def __post_init__(self) -> None:
        if self.code1 == self.code2:
            raise ValueError(f"a model needs two different CPIs, got {self.code1!r} twice")

    @property
    def pair(self) -> tuple[str, str]:
        return tuple(sorted((self.code1, self.code2)))  # type: ignore[return-value]

    def canonical(self) -> ModelSpec:
        """Same model with ``code1 < code2``."""
        if self.code1 < self.code2:
            return self
        return ModelSpec(self.code2, self.lag2, self.code1, self.lag1, self.b2, self.b1, self.c, self.d)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.b1, self.b2, self.c, self.d])

    def to_dict(self) -> dict[str, Any]:
        return {
            "code1": self.code1,
            "lag1": self.lag1,
            "code2": self.code2,
            "lag2": self.lag2,
            "b1": self.b1,
            "b2": self.b2,
            "c": self.c,
            "d": self.d,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ModelSpec:
        return cls(
            code1=str(d["code1"]),
            lag1=int(d["lag1"]),
            code2=str(d["code2"]),
            lag2=int(d["lag2"]),
            b1=float(d["b1"]),
            b2=float(d["b2"]),
            c=float(d["c"]),
            d=float(d["d"]),
        )


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    residuals: MonthlySeries = field(repr=False)
    ssr: float
    sterr: float
    r2: float
    n_obs: int

    @property
    def start(self) -> MonthKey:
        return self.residuals.start

    @property
    def anchor(self) -> MonthKey:
        return self.residuals.end


@dataclass
class BatchFit:
    """Vectorised solution of a stack of 4-column designs."""

    coef: np.ndarray  # (B, 4), nan where rejected
    ssr: np.ndarray  # (B,), nan where rejected
    rcond: np.ndarray  # (B,)
    ok: np.ndarray  # (B,) bool


def solve_designs(X: np.ndarray, y: np.ndarray, rcond_min: float = RCOND_MIN) -> BatchFit:
    """Least squares for each design ``X[b]`` (shape ``(B, n, 4)``) against ``y``.

    Householder QR per design, back-substitution on R. A design is rejected
    when the reciprocal condition number of its column-equilibrated R falls
    below ``rcond_min``. Each design is processed independently, so results
    do not depend on how a candidate set is split into batches.
    """
    X = np.asarray(X, dtype=np.float64)
    B, n, k = X.shape
    Q, R = np.linalg.qr(X, mode="reduced")
    norms = np.sqrt(np.einsum("bnk,bnk->bk", X, X))
    with np.errstate(divide="ignore", invalid="ignore"):
        R_eq = R / norms[:, None, :]
    finite = np.all(np.isfinite(R_eq), axis=(1, 2)) & np.all(norms > 0, axis=1)
    rcond = np.zeros(B)
    if finite.any():
        sv = np.linalg.svd(R_eq[finite], compute_uv=False)
        rcond[finite] = sv[:, -1] / sv[:, 0]
    ok = finite & (rcond >= rcond_min)

    coef = np.full((B, k), np.nan)
    ssr = np.full(B, np.nan)
    if ok.any():
        Qo, Ro, Xo = Q[ok], R[ok], X[ok]
        qty = np.einsum("bnk,n->bk", Qo, y)
        beta = np.empty_like(qty)
        for i in range(k - 1, -1, -1):
            acc = qty[:, i] - np.einsum("bj,bj->b", Ro[:, i, i + 1 :], beta[:, i + 1 :])
            beta[:, i] = acc / Ro[:, i, i]
        resid = y[None, :] - np.einsum("bnk,bk->bn", Xo, beta)
        coef[ok] = beta
        ssr[ok] = np.einsum("bn,bn->b", resid, resid)
    return BatchFit(coef, ssr, rcond, ok)


def sterr_from_ssr(ssr, n_obs: int):
    """Residual standard error with J - 4 degrees of freedom."""
    return np.sqrt(ssr / (n_obs - N_COEF))


def lagged_window(series: MonthlySeries, lag: int, first: MonthKey, last: MonthKey) -> np.ndarray:
    """Values of ``series`` at ``m - lag`` for m in ``first..last``."""
    return series.window(first - lag, last - lag)


def _sample(price: MonthlySeries, start: MonthKey, anchor: MonthKey, min_obs: int) -> np.ndarray:
    if anchor < start:
        raise InsufficientData(f"anchor {anchor} precedes start {start}")
    n = anchor - start + 1
    if n < max(min_obs, N_COEF + 1):
        raise InsufficientData(f"{n} observations in {start}..{anchor}, need at least {max(min_obs, N_COEF + 1)}")
    if not price.covers(start, anchor):
        raise InsufficientData(f"price series {price.start}..{price.end} does not cover {start}..{anchor}")
    return np.asarray(price.window(start, anchor))


def fit_candidate(
    price: MonthlySeries,
    catalog: Mapping[str, MonthlySeries],
    code1: str,
    lag1: int,
    code2: str,
    lag2: int,
    start: MonthKey,
    anchor: MonthKey,
    min_obs: int = DEFAULT_MIN_OBS,
) -> FitResult:
    """Fit one (pair, lags) candidate over the sample ``start..anchor``.

    Raises ``RankDeficient`` when the four regressors are (numerically)
    collinear, ``InsufficientData`` when the sample is too short or a series
    does not reach far enough, ``UnknownCode`` for codes missing from
    ``catalog``.
    """
    if code1 == code2:
        raise ValueError("code1 and code2 must differ")
    s1 = lookup(catalog, code1)
    s2 = lookup(catalog, code2)
    y = _sample(price, start, anchor, min_obs)
    n = y.shape[0]
    try:
        x1 = lagged_window(s1, lag1, start, anchor)
        x2 = lagged_window(s2, lag2, start, anchor)
    except MissingMonth as exc:
        raise InsufficientData(str(exc)) from None
    X = np.column_stack([x1, x2, trend_vector(start, n), np.ones(n)])[None]
    batch = solve_designs(X, y)
    if not batch.ok[0]:
        raise RankDeficient(
            f"{code1}(t-{lag1}), {code2}(t-{lag2}), trend, constant are collinear "
            f"(rcond={batch.rcond[0]:.3g})"
        )
    return build_fit(code1, lag1, code2, lag2, batch.coef[0], X[0], y, start, float(batch.ssr[0]))


def build_fit(code1, lag1, code2, lag2, coef, X, y, start: MonthKey, ssr: float) -> FitResult:
    """Assemble a FitResult; ``ssr`` comes from the solver so rankings stay exact."""
    b1, b2, c, d = (float(v) for v in coef)
    spec = ModelSpec(code1, int(lag1), code2, int(lag2), b1, b2, c, d)
    resid = y - X @ coef
    n = y.shape[0]
    centered = y - y.mean()
    sst = float(centered @ centered)
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    return FitResult(
        spec=spec,
        residuals=MonthlySeries(start, resid),
        ssr=ssr,
        sterr=float(sterr_from_ssr(ssr, n)),
        r2=min(1.0, max(0.0, r2)),
        n_obs=n,
    )


def evaluate_model(spec: ModelSpec, catalog: Mapping[str, MonthlySeries], m: MonthKey) -> float:
    """Model price at month ``m``."""
    x1 = lookup(catalog, spec.code1).at(m - spec.lag1)
    x2 = lookup(catalog, spec.code2).at(m - spec.lag2)
    return spec.b1 * x1 + spec.b2 * x2 + spec.c * trend_time(m) + spec.d


def predict_series(
    spec: ModelSpec, catalog: Mapping[str, MonthlySeries], first: MonthKey, last: MonthKey
) -> MonthlySeries:
    """:func:`evaluate_model` over every month in ``first..last``."""
    x1 = lagged_window(lookup(catalog, spec.code1), spec.lag1, first, last)
    x2 = lagged_window(lookup(catalog, spec.code2), spec.lag2, first, last)
    t = trend_vector(first, x1.shape[0])
    return MonthlySeries(first, spec.b1 * x1 + spec.b2 * x2 + spec.c * t + spec.d)


def prediction_span(spec: ModelSpec, catalog: Mapping[str, MonthlySeries]) -> tuple[MonthKey, MonthKey]:
    """Months for which both lagged CPIs are available."""
    s1 = lookup(catalog, spec.code1)
    s2 = lookup(catalog, spec.code2)
    first = max(s1.start + spec.lag1, s2.start + spec.lag2)
    last = min(s1.end + spec.lag1, s2.end + spec.lag2)
    if last < first:
        raise MissingMonth(f"{spec.code1} and {spec.code2} have no common lagged span")
    return first, last


def actual_vs_predicted_r2(actual: MonthlySeries, predicted: MonthlySeries) -> float:
    """R² of the simple regression of actual on predicted over their overlap."""
    span = overlap(actual, predicted)
    if span is None or span[1] - span[0] + 1 < 3:
        raise InsufficientOverlap("actual and predicted overlap by fewer than 3 months")
    a = actual.window(*span) - actual.window(*span).mean()
    p = predicted.window(*span) - predicted.window(*span).mean()
    saa = float(a @ a)
    spp = float(p @ p)
    if saa == 0.0 or spp == 0.0:
        raise DegenerateVariance("actual or predicted series is constant over the overlap")
    r2 = float(a @ p) ** 2 / (saa * spp)
    return min(1.0, r2)
