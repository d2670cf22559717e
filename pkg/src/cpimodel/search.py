"""Exhaustive best-fit search over CPI pairs and lag combinations."""

from __future__ import annotations

import os
from collections.abc import Iterator, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .data import MonthKey, MonthlySeries, effective_lead, trend_vector
from .errors import EmptyCatalog, NoFeasibleCandidate
from .regression import (
    DEFAULT_MIN_OBS,
    FitResult,
    _sample,
    build_fit,
    solve_designs,
    sterr_from_ssr,
)

CHUNK = 2048
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    anchor: MonthKey
    start: MonthKey = MonthKey(2003, 7)
    max_lag: int = 11
    max_lead: int = 8
    latest_cpi: MonthKey | None = None  # None: latest month in the catalog
    top_k: int = 10
    min_obs: int = DEFAULT_MIN_OBS

    def __post_init__(self) -> None:
        if self.max_lag < 0 or self.max_lead < 0:
            raise ValueError("max_lag and max_lead must be non-negative")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")

    def lead_cap(self, catalog: Mapping[str, MonthlySeries]) -> int:
        latest = self.latest_cpi
        if latest is None:
            latest = max(s.end for s in catalog.values())
        return effective_lead(self.max_lead, latest, self.anchor)

    def lag_range(self, catalog: Mapping[str, MonthlySeries]) -> range:
        return range(-self.lead_cap(catalog), self.max_lag + 1)

    def with_anchor(self, anchor: MonthKey) -> SearchConfig:
        return replace(self, anchor=anchor)

    def to_dict(self) -> dict:
        return {
            "start": str(self.start),
            "anchor": str(self.anchor),
            "max_lag": self.max_lag,
            "max_lead": self.max_lead,
            "latest_cpi": None if self.latest_cpi is None else str(self.latest_cpi),
            "top_k": self.top_k,
            "min_obs": self.min_obs,
        }


@dataclass(frozen=True)
class SearchResult:
    best: FitResult
    ranked: list[FitResult]
    n_candidates: int
    n_rejected: int
    lead_cap: int
    config: SearchConfig = field(repr=False)


def _sorted_codes(catalog: Mapping[str, MonthlySeries]) -> list[str]:
    if len(catalog) < 2:
        raise EmptyCatalog(f"need at least two CPI series, got {len(catalog)}")
    return sorted(catalog)


def enumerate_candidates(
    catalog: Mapping[str, MonthlySeries], config: SearchConfig
) -> Iterator[tuple[str, int, str, int]]:
    """Yield ``(code1, lag1, code2, lag2)`` for every unordered pair and lag combination.

    ``code1 < code2`` lexicographically; order is pair-major, then lag1, then lag2.
    """
    codes = _sorted_codes(catalog)
    lags = config.lag_range(catalog)
    for a, b in combinations(codes, 2):
        for l1 in lags:
            for l2 in lags:
                yield a, l1, b, l2


def count_candidates(catalog: Mapping[str, MonthlySeries], config: SearchConfig) -> int:
    k = len(_sorted_codes(catalog))
    n_lags = len(config.lag_range(catalog))
    return k * (k - 1) // 2 * n_lags * n_lags


def tie_key(spec) -> tuple:
    return (abs(spec.lag1) + abs(spec.lag2), spec.code1, spec.code2, spec.lag1, spec.lag2)


def _tolerant_order(sterr: np.ndarray, key, order: np.ndarray, limit: int) -> list[int]:
    """Refine an sterr-sorted order so near-equal values are ordered by ``key``.

    A group starts at some value v and absorbs followers within ``TIE_RTOL * v``.
    Only the first ``limit`` positions (plus the group straddling the limit) are
    materialised.
    """
    out: list[int] = []
    i = 0
    n = len(order)
    while i < n and len(out) < limit:
        v0 = sterr[order[i]]
        tol = TIE_RTOL * abs(v0)
        j = i + 1
        while j < n and sterr[order[j]] - v0 <= tol:
            j += 1
        group = sorted(order[i:j].tolist(), key=key)
        out.extend(group)
        i = j
    return out[:limit]


def _resolve_threads(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return threads


def best_fit_search(
    price: MonthlySeries,
    catalog: Mapping[str, MonthlySeries],
    config: SearchConfig,
    threads: int | None = 1,
) -> SearchResult:
    """Fit every candidate and return the minimal-sterr model plus the top-k.

    Candidates are cut into fixed-size chunks before any parallel dispatch, so
    the result does not depend on ``threads``. Candidates whose lagged CPI
    window is not covered, or whose design is rank deficient, count as
    rejected.
    """
    codes = _sorted_codes(catalog)
    lags = np.asarray(config.lag_range(catalog))
    n_lags = lags.shape[0]
    y = _sample(price, config.start, config.anchor, config.min_obs)
    n = y.shape[0]
    start, anchor = config.start, config.anchor

    # One column per (code, lag); infeasible columns stay NaN.
    n_cols = len(codes) * n_lags
    cols = np.full((n, n_cols), np.nan)
    feasible_col = np.zeros(n_cols, dtype=bool)
    for ci, code in enumerate(codes):
        s = catalog[code]
        for li, lag in enumerate(lags):
            first, last = start - int(lag), anchor - int(lag)
            if s.covers(first, last):
                cols[:, ci * n_lags + li] = s.window(first, last)
                feasible_col[ci * n_lags + li] = True

    pa, pb = np.triu_indices(len(codes), k=1)
    l1i, l2i = np.meshgrid(np.arange(n_lags), np.arange(n_lags), indexing="ij")
    l1i, l2i = l1i.ravel(), l2i.ravel()
    cand_a = np.repeat(pa, n_lags * n_lags)
    cand_b = np.repeat(pb, n_lags * n_lags)
    cand_l1 = np.tile(l1i, pa.shape[0])
    cand_l2 = np.tile(l2i, pa.shape[0])
    col1 = cand_a * n_lags + cand_l1
    col2 = cand_b * n_lags + cand_l2
    n_candidates = col1.shape[0]

    live = np.flatnonzero(feasible_col[col1] & feasible_col[col2])
    tail = np.column_stack([trend_vector(start, n), np.ones(n)])

    def run(chunk: np.ndarray):
        X = np.empty((chunk.shape[0], n, 4))
        X[:, :, 0] = cols[:, col1[chunk]].T
        X[:, :, 1] = cols[:, col2[chunk]].T
        X[:, :, 2:] = tail
        return solve_designs(X, y)

    chunks = [live[i : i + CHUNK] for i in range(0, live.shape[0], CHUNK)]
    workers = min(_resolve_threads(threads), max(1, len(chunks)))
    if workers == 1:
        fits = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(run, chunks))

    if fits:
        ssr = np.concatenate([f.ssr for f in fits])
        coef = np.concatenate([f.coef for f in fits])
        ok = np.concatenate([f.ok for f in fits])
    else:
        ssr = np.empty(0)
        coef = np.empty((0, 4))
        ok = np.empty(0, dtype=bool)
    n_rejected = n_candidates - int(ok.sum())
    if not ok.any():
        raise NoFeasibleCandidate(
            f"none of {n_candidates} candidates could be fitted for {start}..{anchor}"
        )

    good = np.flatnonzero(ok)
    g_idx = live[good]
    g_sterr = sterr_from_ssr(ssr[good], n)
    l1v = lags[cand_l1[g_idx]]
    l2v = lags[cand_l2[g_idx]]
    ca, cb = cand_a[g_idx], cand_b[g_idx]
    absl = np.abs(l1v) + np.abs(l2v)
    order = np.lexsort((l2v, l1v, cb, ca, absl, g_sterr))
    picked = _tolerant_order(
        g_sterr,
        lambda g: (int(absl[g]), int(ca[g]), int(cb[g]), int(l1v[g]), int(l2v[g])),
        order,
        config.top_k,
    )

    ranked: list[FitResult] = []
    for g in picked:
        X = np.column_stack([cols[:, col1[g_idx[g]]], cols[:, col2[g_idx[g]]], tail])
        ranked.append(
            build_fit(
                codes[ca[g]], int(l1v[g]), codes[cb[g]], int(l2v[g]),
                coef[good[g]], X, y, start, float(ssr[good[g]]),
            )
        )
    return SearchResult(
        best=ranked[0],
        ranked=ranked,
        n_candidates=n_candidates,
        n_rejected=n_rejected,
        lead_cap=int(-lags[0]),
        config=config,
    )
