from types import SimpleNamespace

import pytest

from cpimodel.regression import ModelSpec
from cpimodel.search import SearchConfig, best_fit_search
from cpimodel.stability import AnchorOutcome, _summarise, backtrack_models, reliability_verdict
from cpimodel.synthkit import random_truth, synthesize_price, with_relative_noise

from .conftest import LAST, PRICE_START


def _fake_report(pairs):
    """Report from a list of CPI pairs (None marks a failed anchor), oldest first."""
    anchors = [LAST - k for k in range(len(pairs) - 1, -1, -1)]
    outcomes = []
    for i, (a, pair) in enumerate(zip(anchors, pairs)):
        if pair is None:
            outcomes.append(AnchorOutcome(a, None, "NoFeasibleCandidate: nothing"))
            continue
        spec = ModelSpec(pair[0], i % 3, pair[1], 2, 1.0 + i, -2.0, 3.0, 4.0)
        outcomes.append(AnchorOutcome(a, SimpleNamespace(best=SimpleNamespace(spec=spec, sterr=1.0 + i / 10))))
    return _summarise(anchors, outcomes)


class TestVerdict:
    def test_all_same(self):
        r = _fake_report([("F", "ORPR")] * 8)
        assert reliability_verdict(r, "strict")
        assert reliability_verdict(r, "majority", quorum=8)
        assert r.lag_drift["lag1"] == (0, 2)
        assert r.coeff_drift["b1"] == (1.0, 8.0)

    def test_one_deviant(self):
        r = _fake_report([("F", "ORPR")] * 7 + [("EGGS", "F")])
        assert not reliability_verdict(r, "strict")
        assert reliability_verdict(r, "majority", quorum=7)
        assert reliability_verdict(r, "majority")  # default quorum is window - 1
        assert not reliability_verdict(r, "majority", quorum=8)
        assert r.majority_pair == ("F", "ORPR") and r.majority_count == 7

    def test_failed_anchor_breaks_strict(self):
        r = _fake_report([("F", "ORPR")] * 7 + [None])
        assert not reliability_verdict(r, "strict")
        assert reliability_verdict(r, "majority", quorum=7)

    def test_majority_tie_goes_to_smaller_pair(self):
        r = _fake_report([("B", "C")] * 4 + [("A", "Z")] * 4)
        assert r.majority_pair == ("A", "Z")
        assert not reliability_verdict(r, "majority")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            reliability_verdict(_fake_report([("A", "B")] * 2), "loose")


@pytest.fixture(scope="module")
def setup(catalog6):
    truth = with_relative_noise(random_truth(catalog6, PRICE_START, LAST, seed=3001), catalog6, 0.01)
    price = synthesize_price(truth, catalog6)
    cfg = SearchConfig(anchor=LAST, start=PRICE_START)
    return catalog6, truth, price, cfg


class TestBacktrack:
    def test_newest_anchor_matches_standalone_search(self, setup):
        cat, _, price, cfg = setup
        rep = backtrack_models(price, cat, LAST, cfg, window=4)
        direct = best_fit_search(price, cat, cfg)
        newest = rep.outcomes[-1].best
        assert rep.anchors[-1] == LAST
        assert newest.spec == direct.best.spec and newest.sterr == direct.best.sterr

    def test_anchor_layout_and_lead_growth(self, setup):
        cat, _, price, cfg = setup
        rep = backtrack_models(price, cat, LAST, cfg, window=8)
        assert rep.anchors == [LAST - k for k in range(7, -1, -1)]
        counts = [o.result.n_candidates for o in rep.outcomes]
        # older anchors may lead further, so counts never shrink going back
        assert counts == sorted(counts, reverse=True)
        assert [o.result.lead_cap for o in rep.outcomes] == list(range(7, -1, -1))

    def test_recovers_truth_pair(self, setup):
        cat, truth, price, cfg = setup
        rep = backtrack_models(price, cat, LAST, cfg, window=8)
        assert reliability_verdict(rep, "strict")
        assert rep.majority_pair == truth.spec.canonical().pair

    def test_deterministic(self, setup):
        cat, _, price, cfg = setup
        a = backtrack_models(price, cat, LAST, cfg, window=3, threads=1)
        b = backtrack_models(price, cat, LAST, cfg, window=3, threads=3)
        assert [o.best.spec for o in a.outcomes] == [o.best.spec for o in b.outcomes]

    def test_failure_is_recorded(self, setup):
        cat, _, price, cfg = setup
        tight = SearchConfig(anchor=LAST, start=PRICE_START, min_obs=112)
        rep = backtrack_models(price, cat, LAST, tight, window=3)
        assert rep.outcomes[0].result is None and "InsufficientData" in rep.outcomes[0].error
        assert rep.outcomes[-1].best is not None
        assert not reliability_verdict(rep, "strict")

    def test_window_too_small(self, setup):
        cat, _, price, cfg = setup
        with pytest.raises(ValueError):
            backtrack_models(price, cat, LAST, cfg, window=1)
