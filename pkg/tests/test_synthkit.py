import numpy as np
import pytest

from cpimodel.data import MonthKey
from cpimodel.errors import SpanTooShort
from cpimodel.regression import ModelSpec, fit_candidate
from cpimodel.search import SearchConfig
from cpimodel.synthkit import (
    Stream,
    coefficient_error,
    generate_catalog,
    random_truth,
    recovery_trial,
    synthesize_price,
    with_relative_noise,
)

from .conftest import CPI_START, LAST, PRICE_START


class TestStream:
    def test_reproducible(self):
        assert np.array_equal(Stream(42).normal(101), Stream(42).normal(101))
        assert not np.array_equal(Stream(42).uniform(10), Stream(43).uniform(10))

    def test_frozen_values(self):
        # pins the bit-to-float mapping so streams stay stable across releases
        u = Stream(0).uniform(3)
        raw = np.random.PCG64(0).random_raw(3)
        np.testing.assert_array_equal(u, (raw >> np.uint64(11)) * 2.0**-53)

    def test_moments(self):
        z = Stream(1).normal(200_000)
        assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
        u = Stream(2).uniform(100_000)
        assert u.min() >= 0.0 and u.max() < 1.0


class TestCatalog:
    def test_deterministic(self):
        assert generate_catalog(5, CPI_START, LAST, 9) == generate_catalog(5, CPI_START, LAST, 9)
        assert generate_catalog(5, CPI_START, LAST, 9) != generate_catalog(5, CPI_START, LAST, 10)

    def test_large_catalog_shape(self):
        cat = generate_catalog(92, MonthKey(2000, 1), LAST, 123)
        assert len(cat) == 92 and cat.codes[0] == "X01" and cat.codes[-1] == "X92"
        for s in cat.values():
            assert s.start == MonthKey(2000, 1) and s.end == LAST
            assert np.all(s.values > 0)

    def test_span_too_short(self):
        with pytest.raises(SpanTooShort):
            generate_catalog(3, MonthKey(2010, 1), MonthKey(2012, 11), 1)

    @pytest.mark.parametrize("seed", range(100))
    def test_truth_design_full_rank(self, seed):
        cat = generate_catalog(4, CPI_START, LAST, seed)
        truth = random_truth(cat, PRICE_START, LAST, seed)
        s = truth.spec
        assert s.code1 != s.code2 and 0 <= s.lag1 <= 11 and 0 <= s.lag2 <= 11
        assert 1 <= abs(s.b1) < 10 and 5 <= abs(s.c) < 30 and 100 <= abs(s.d) < 500
        price = synthesize_price(truth, cat)
        fit = fit_candidate(price, cat, s.code1, s.lag1, s.code2, s.lag2, PRICE_START, LAST)
        np.testing.assert_allclose(fit.spec.coefficients, s.coefficients, rtol=1e-6)


class TestNoise:
    def test_residual_std_tracks_sigma(self, catalog20):
        truth = random_truth(catalog20, PRICE_START, LAST, seed=5, noise_sigma=2.0)
        price = synthesize_price(truth, catalog20)
        s = truth.spec
        fit = fit_candidate(price, catalog20, s.code1, s.lag1, s.code2, s.lag2, PRICE_START, LAST)
        assert fit.sterr == pytest.approx(2.0, rel=0.15)

    def test_relative_noise(self, catalog20):
        truth = random_truth(catalog20, PRICE_START, LAST, seed=6)
        noisy = with_relative_noise(truth, catalog20, 0.01)
        clean = synthesize_price(truth, catalog20)
        assert noisy.noise_sigma == pytest.approx(0.01 * np.std(clean.values))
        assert synthesize_price(noisy, catalog20) == synthesize_price(noisy, catalog20)

    def test_negative_sigma(self, catalog20):
        with pytest.raises(ValueError):
            random_truth(catalog20, PRICE_START, LAST, seed=1, noise_sigma=-1.0)


class TestRecovery:
    def test_coefficient_error(self):
        t = ModelSpec("A", 1, "B", 2, 2.0, 4.0, 10.0, 100.0)
        e = ModelSpec("B", 2, "A", 1, 4.4, 2.0, 10.0, 100.0)  # same model, swapped order
        assert coefficient_error(e, t) == pytest.approx(0.1)
        assert coefficient_error(ModelSpec("A", 0, "B", 2, 2, 4, 10, 100), t) == float("inf")

    def test_noiseless_trial(self, catalog20):
        truth = random_truth(catalog20, PRICE_START, LAST, seed=1001)
        rec = recovery_trial(truth, catalog20, SearchConfig(anchor=LAST, start=PRICE_START))
        assert rec.recovered_pair and rec.recovered_lags
        assert rec.coef_max_rel_error < 1e-8
