"""Seeded synthetic CPI catalogs and prices with known generating models.

Random numbers come from a fixed algorithm so that streams are reproducible
across platforms and NumPy versions:

* bits: PCG64 (``numpy.random.PCG64(seed).random_raw``), 64-bit outputs;
* uniforms: ``(raw >> 11) * 2**-53``, i.e. the top 53 bits, in [0, 1);
* normals: Box-Muller on consecutive uniform pairs ``(u1, u2)``, using
  ``1 - u1`` so the logarithm never sees zero; both variates of a pair are used.

NumPy's ``Generator.normal`` is not used on purpose: its ziggurat details are
not part of the stream-compatibility promise.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .data import CpiCatalog, MonthKey, MonthlySeries
from .errors import SpanTooShort
from .regression import ModelSpec, predict_series
from .search import SearchConfig, SearchResult, best_fit_search

MIN_SPAN = 36


class Stream:
    """Uniform and normal variates from PCG64 raw output."""

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed)

    def uniform(self, n: int) -> np.ndarray:
        raw = np.asarray(self._bits.random_raw(n), dtype=np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * (2.0**-53)

    def normal(self, n: int) -> np.ndarray:
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        theta = 2.0 * math.pi * u2
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]


def generate_catalog(n_series: int, first: MonthKey, last: MonthKey, seed: int) -> CpiCatalog:
    """CPI-like catalog: log random walks with positive drift.

    Starting levels are drawn in [100, 250), monthly log drift in
    [0.001, 0.004), monthly log volatility in [0.002, 0.006).
    """
    if n_series < 2:
        raise ValueError("n_series must be at least 2")
    n = last - first + 1
    if n < MIN_SPAN:
        raise SpanTooShort(f"span {first}..{last} has {n} months, need {MIN_SPAN}")
    st = Stream(seed)
    width = max(2, len(str(n_series)))
    entries = []
    k = np.arange(n)
    for i in range(n_series):
        level0, mu, vol = st.uniform(3)
        level0 = 100.0 + 150.0 * level0
        mu = 0.001 + 0.003 * mu
        vol = 0.002 + 0.004 * vol
        z = st.normal(n)
        z[0] = 0.0
        path = math.log(level0) + mu * k + vol * np.cumsum(z)
        entries.append((f"X{i + 1:0{width}d}", MonthlySeries(first, np.exp(path))))
    return CpiCatalog(entries)


@dataclass(frozen=True)
class TruthSpec:
    spec: ModelSpec
    noise_sigma: float
    seed: int
    first: MonthKey
    last: MonthKey

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def random_truth(
    catalog: Mapping[str, MonthlySeries],
    first: MonthKey,
    last: MonthKey,
    seed: int,
    max_lag: int = 11,
    min_lag: int = 0,
    noise_sigma: float = 0.0,
) -> TruthSpec:
    """Draw a generating model: two distinct codes, lags in ``min_lag..max_lag``.

    |b| in [1, 10), |c| in [5, 30), |d| in [100, 500), signs random.
    """
    st = Stream(seed)
    codes = list(catalog)
    u = st.uniform(12)
    i = int(u[0] * len(codes))
    j = int(u[1] * (len(codes) - 1))
    if j >= i:
        j += 1
    span = max_lag - min_lag + 1
    lag1 = min_lag + int(u[2] * span)
    lag2 = min_lag + int(u[3] * span)

    def signed(lo, hi, a, b):
        return (lo + (hi - lo) * a) * (1.0 if b < 0.5 else -1.0)

    spec = ModelSpec(
        codes[i], lag1, codes[j], lag2,
        b1=signed(1, 10, u[4], u[5]),
        b2=signed(1, 10, u[6], u[7]),
        c=signed(5, 30, u[8], u[9]),
        d=signed(100, 500, u[10], u[11]),
    )
    return TruthSpec(spec, noise_sigma, seed, first, last)


def noiseless_price(truth: TruthSpec, catalog: Mapping[str, MonthlySeries]) -> MonthlySeries:
    return predict_series(truth.spec, catalog, truth.first, truth.last)


def with_relative_noise(truth: TruthSpec, catalog: Mapping[str, MonthlySeries], fraction: float) -> TruthSpec:
    """Copy of ``truth`` with sigma = fraction * std of the noiseless price."""
    std = float(np.std(noiseless_price(truth, catalog).values))
    return TruthSpec(truth.spec, fraction * std, truth.seed, truth.first, truth.last)


def synthesize_price(truth: TruthSpec, catalog: Mapping[str, MonthlySeries]) -> MonthlySeries:
    """Model price over the truth span plus seeded N(0, sigma²) noise."""
    clean = noiseless_price(truth, catalog)
    if truth.noise_sigma == 0:
        return clean
    noise = Stream(truth.seed ^ 0x5EED).normal(len(clean))
    return MonthlySeries(clean.start, clean.values + truth.noise_sigma * noise)


@dataclass(frozen=True)
class TrialRecord:
    truth: TruthSpec
    recovered_pair: bool
    recovered_lags: bool
    coef_max_rel_error: float
    result: SearchResult


def coefficient_error(estimate: ModelSpec, truth: ModelSpec) -> float:
    """Largest relative error over (b1, b2, c, d) after canonical orientation."""
    e, t = estimate.canonical(), truth.canonical()
    if (e.code1, e.code2, e.lag1, e.lag2) != (t.code1, t.code2, t.lag1, t.lag2):
        return math.inf
    return float(np.max(np.abs(e.coefficients - t.coefficients) / np.abs(t.coefficients)))


def recovery_trial(
    truth: TruthSpec,
    catalog: Mapping[str, MonthlySeries],
    config: SearchConfig,
    threads: int | None = 1,
) -> TrialRecord:
    price = synthesize_price(truth, catalog)
    result = best_fit_search(price, catalog, config, threads=threads)
    est = result.best.spec.canonical()
    tru = truth.spec.canonical()
    pair_ok = est.pair == tru.pair
    lags_ok = pair_ok and (est.lag1, est.lag2) == (tru.lag1, tru.lag2)
    return TrialRecord(truth, pair_ok, lags_ok, coefficient_error(est, tru), result)
