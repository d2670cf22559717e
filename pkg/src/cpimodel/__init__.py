"""Share prices modelled as lagged pairs of consumer price indices."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    CpiCatalog,
    MonthKey,
    MonthlySeries,
    first_difference,
    lag_shift,
    normalize_to_peak,
    parse_catalog_csv,
    parse_price_csv,
    trend_time,
    validate_window,
)
from .regression import (  # noqa: E402
    FitResult,
    ModelSpec,
    actual_vs_predicted_r2,
    evaluate_model,
    fit_candidate,
)
from .search import SearchConfig, SearchResult, best_fit_search, enumerate_candidates  # noqa: E402
from .stability import StabilityReport, backtrack_models, reliability_verdict  # noqa: E402

__all__ = [
    "CpiCatalog",
    "FitResult",
    "ModelSpec",
    "MonthKey",
    "MonthlySeries",
    "SearchConfig",
    "SearchResult",
    "StabilityReport",
    "actual_vs_predicted_r2",
    "backtrack_models",
    "best_fit_search",
    "enumerate_candidates",
    "evaluate_model",
    "first_difference",
    "fit_candidate",
    "lag_shift",
    "normalize_to_peak",
    "parse_catalog_csv",
    "parse_price_csv",
    "reliability_verdict",
    "trend_time",
    "validate_window",
]
