"""Rolling re-estimation over consecutive anchor months and reliability verdicts."""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass

from .data import MonthKey, MonthlySeries
from .errors import CpiModelError
from .regression import FitResult
from .search import SearchConfig, SearchResult, best_fit_search

DEFAULT_WINDOW = 8


@dataclass(frozen=True)
class AnchorOutcome:
    anchor: MonthKey
    result: SearchResult | None
    error: str | None = None

    @property
    def best(self) -> FitResult | None:
        return None if self.result is None else self.result.best


@dataclass(frozen=True)
class StabilityReport:
    anchors: list[MonthKey]  # oldest first
    outcomes: list[AnchorOutcome]
    pair_consistent: bool
    majority_pair: tuple[str, str] | None
    majority_count: int
    lag_drift: dict[str, tuple[int, int]]
    coeff_drift: dict[str, tuple[float, float]]

    @property
    def window(self) -> int:
        return len(self.anchors)

    @property
    def bests(self) -> list[FitResult | None]:
        return [o.best for o in self.outcomes]


def _summarise(anchors: list[MonthKey], outcomes: list[AnchorOutcome]) -> StabilityReport:
    pairs = [o.best.spec.pair for o in outcomes if o.best is not None]
    counts = Counter(pairs)
    if counts:
        # highest count, then lexicographically smallest pair
        majority, count = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    else:
        majority, count = None, 0
    consistent = len(pairs) == len(outcomes) and len(counts) == 1

    lag_drift: dict[str, tuple[int, int]] = {}
    coeff_drift: dict[str, tuple[float, float]] = {}
    specs = [o.best.spec for o in outcomes if o.best is not None and o.best.spec.pair == majority]
    if specs:
        for name in ("lag1", "lag2"):
            vals = [getattr(s, name) for s in specs]
            lag_drift[name] = (min(vals), max(vals))
        for name in ("b1", "b2", "c", "d"):
            vals = [getattr(s, name) for s in specs]
            coeff_drift[name] = (min(vals), max(vals))
        sterrs = [o.best.sterr for o in outcomes if o.best is not None and o.best.spec.pair == majority]
        coeff_drift["sterr"] = (min(sterrs), max(sterrs))
    return StabilityReport(anchors, outcomes, consistent, majority, count, lag_drift, coeff_drift)


def backtrack_models(
    price: MonthlySeries,
    catalog: Mapping[str, MonthlySeries],
    anchor: MonthKey,
    config: SearchConfig,
    window: int = DEFAULT_WINDOW,
    threads: int | None = 1,
) -> StabilityReport:
    """Best-fit search at each of ``window`` anchors ending at ``anchor``.

    Every search starts at ``config.start``; the lead cap is recomputed per
    anchor, so older anchors may use CPIs published after them. A failing
    anchor is recorded, not raised.
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    anchors = [anchor - k for k in range(window - 1, -1, -1)]
    outcomes = []
    for a in anchors:
        try:
            res = best_fit_search(price, catalog, config.with_anchor(a), threads=threads)
            outcomes.append(AnchorOutcome(a, res))
        except CpiModelError as exc:
            outcomes.append(AnchorOutcome(a, None, f"{type(exc).__name__}: {exc}"))
    return _summarise(anchors, outcomes)


def reliability_verdict(report: StabilityReport, mode: str = "strict", quorum: int | None = None) -> bool:
    """Strict: one CPI pair at every anchor. Majority: the modal pair reaches ``quorum``."""
    if mode == "strict":
        return report.pair_consistent
    if mode == "majority":
        if quorum is None:
            quorum = report.window - 1
        return report.majority_count >= quorum
    raise ValueError(f"unknown mode {mode!r}; use 'strict' or 'majority'")
