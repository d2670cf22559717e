"""Sensitivity arithmetic and what-if comparisons of fitted models."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

from .data import MonthKey, MonthlySeries
from .errors import DataError, NonPositivePrice, ZeroDenominator
from .regression import ModelSpec, predict_series


class ScenarioPath(Mapping[str, MonthlySeries]):
    """Assumed absolute CPI levels per code, usually history plus a projection."""

    def __init__(self, series: Mapping[str, MonthlySeries]):
        for code, s in series.items():
            if len(s) == 0:
                raise DataError(f"path for {code!r} is empty")
        self._series = dict(series)

    def __getitem__(self, code: str) -> MonthlySeries:
        return self._series[code]

    def __iter__(self) -> Iterator[str]:
        return iter(self._series)

    def __len__(self) -> int:
        return len(self._series)


def extend_with_growth(
    history: Mapping[str, MonthlySeries],
    monthly_rates: Mapping[str, float],
    through: MonthKey,
) -> ScenarioPath:
    """Continue each series to ``through`` at a constant monthly growth rate.

    Rates are fractions per month (0.002 = 0.2%/month); codes without a rate
    stay flat at their last observed level.
    """
    out = {}
    for code, s in history.items():
        extra = through - s.end
        if extra <= 0:
            out[code] = s
            continue
        g = float(monthly_rates.get(code, 0.0))
        tail = s.values[-1] * (1.0 + g) ** np.arange(1, extra + 1)
        out[code] = MonthlySeries(s.start, np.concatenate([s.values, tail]))
    return ScenarioPath(out)


def coefficient_ratio(spec: ModelSpec) -> float:
    """b1 / b2."""
    if spec.b2 == 0:
        raise ZeroDenominator(f"b2 is zero for {spec.code1}/{spec.code2}")
    return spec.b1 / spec.b2


def unit_sensitivity(spec: ModelSpec, current_price: float) -> tuple[float, float]:
    """Dollar and percent price change for a one-unit rise in the first CPI."""
    if not current_price > 0:
        raise NonPositivePrice(f"current price must be positive, got {current_price}")
    return spec.b1, 100.0 * spec.b1 / current_price


def project_price(spec: ModelSpec, path: Mapping[str, MonthlySeries], first: MonthKey, last: MonthKey) -> MonthlySeries:
    if last < first:
        raise ValueError(f"empty horizon {first}..{last}")
    return predict_series(spec, path, first, last)


@dataclass(frozen=True)
class ScenarioOutcome:
    label: str
    entry_price: float
    end_price: float
    pct_return: float


def compare_models(
    specs: Mapping[str, ModelSpec],
    path: Mapping[str, MonthlySeries],
    horizon: tuple[MonthKey, MonthKey],
    entry_prices: Mapping[str, float],
) -> list[ScenarioOutcome]:
    """Rank models by projected percent return from entry to the horizon end.

    Equal returns keep the input label order.
    """
    outcomes = []
    for label, spec in specs.items():
        entry = float(entry_prices[label])
        if not entry > 0:
            raise NonPositivePrice(f"entry price for {label!r} must be positive, got {entry}")
        proj = project_price(spec, path, *horizon)
        end = float(proj.values[-1])
        outcomes.append(ScenarioOutcome(label, entry, end, 100.0 * (end - entry) / entry))
    # sorted() is stable, so ties keep label order
    return sorted(outcomes, key=lambda o: -o.pct_return)
