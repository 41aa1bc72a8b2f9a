"""Negative binomial pmf/cdf and the two-group data generator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sparsecount.errors import DomainError
from sparsecount.samplers import (GeneratedDataset, TwoGroupModel, gamma_sample,
                                  generate_two_group, make_rng, nb_cdf, nb_pmf, poisson_sample)


class TestTwoGroupModel:
    def test_success_probabilities(self):
        m = TwoGroupModel(1.3, 0.005, 3.0, 0.05)
        assert m.q_null == pytest.approx(1 / 1.005)
        assert m.q_signal == pytest.approx(1 / 4.005)

    @pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(beta=-1.0), dict(delta=0.0),
                                    dict(p=0.0), dict(p=1.0), dict(p=1.5)])
    def test_invalid(self, kw):
        base = dict(alpha=1.3, beta=0.005, delta=3.0, p=0.05)
        base.update(kw)
        with pytest.raises(DomainError):
            TwoGroupModel(**base)


class TestNegativeBinomial:
    def test_pmf_at_zero(self):
        assert nb_pmf(0, 1.3, 0.25) == pytest.approx(0.25 ** 1.3, rel=1e-14)
        assert nb_pmf(0, 1.3, 0.25) == pytest.approx(0.1649, abs=5e-5)

    def test_geometric(self):
        assert nb_pmf(1, 1.0, 0.5) == pytest.approx(0.25, rel=1e-15)

    def test_real_size_against_mpmath(self):
        # mpmath: binomial(4.5, 3) * 0.6^3 * 0.4^2.5
        assert nb_pmf(3, 2.5, 0.4) == pytest.approx(0.1434409146652376865, rel=1e-13)

    def test_matches_scipy(self):
        y = np.arange(40)
        np.testing.assert_allclose(nb_pmf(y, 1.7, 0.3), stats.nbinom.pmf(y, 1.7, 0.3), rtol=1e-12)

    @pytest.mark.parametrize("y, size, q, expected", [
        (-0.5, 1.3, 0.25, 0.0),
        (1.6667, 1.0, 0.5, 0.75),
        # two-term sum (1/1.5)^1.1 (1 + 1.1/3), evaluated with mpmath
        (1.54, 1.1, 1 / 1.5, 0.87490765627735423552),
    ])
    def test_cdf(self, y, size, q, expected):
        assert nb_cdf(y, size, q) == pytest.approx(expected, rel=1e-13, abs=0)

    @pytest.mark.parametrize("size, q", [(1.3, 0.25), (1.1, 2 / 3), (0.5, 0.1), (10.0, 0.9)])
    def test_sums_to_one(self, size, q):
        # Stop once the geometric tail bound (1-q)^y / q falls below 1e-12.
        ymax = int(math.ceil((math.log(1e-12) + math.log(q)) / math.log1p(-q))) + 200
        total = math.fsum(nb_pmf(np.arange(ymax + 1), size, q))
        assert abs(total - 1.0) <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.1, 20), st.floats(0.01, 0.99), st.integers(0, 200))
    def test_cdf_matches_scipy(self, size, q, y):
        assert nb_cdf(y, size, q) == pytest.approx(stats.nbinom.cdf(y, size, q), rel=1e-9, abs=1e-14)

    @pytest.mark.parametrize("args", [(0, 0.0, 0.5), (0, 1.0, 0.0), (0, 1.0, 1.0), (-1, 1.0, 0.5),
                                      (1.5, 1.0, 0.5)])
    def test_pmf_domain(self, args):
        with pytest.raises(DomainError):
            nb_pmf(*args)


class TestPrimitiveSamplers:
    def test_exponential_mean(self):
        x = gamma_sample(1.0, 2.0, make_rng(1), size=1_000_000)
        assert abs(x.mean() - 2.0) <= 4 * 2.0 / 1000

    def test_small_scale_mean(self):
        x = gamma_sample(1.3, 0.005, make_rng(2), size=1_000_000)
        sd = math.sqrt(1.3) * 0.005
        assert abs(x.mean() - 0.0065) <= 4 * sd / 1000

    def test_gamma_variance(self):
        x = gamma_sample(0.5, 1.0, make_rng(3), size=1_000_000)
        # Var of the sample variance of a Gamma(k, 1): (mu4 - sigma^4)/N, mu4 = 3k(k+2)
        k = 0.5
        se = math.sqrt((3 * k * (k + 2) - k * k) / 1_000_000)
        assert abs(x.var() - 0.5) <= 4 * se

    def test_poisson_zero_mean(self):
        assert np.all(poisson_sample(np.zeros(100), make_rng(4)) == 0)

    def test_poisson_moments(self):
        x = poisson_sample(4.0, make_rng(5), size=1_000_000)
        assert abs(x.mean() - 4.0) <= 4 * 2.0 / 1000
        # Var of sample variance for Poisson(m): (m + 2 m^2) / N
        assert abs(x.var() - 4.0) <= 4 * math.sqrt((4 + 32) / 1_000_000)

    def test_invalid(self):
        with pytest.raises(DomainError):
            gamma_sample(0.0, 1.0, make_rng(0))
        with pytest.raises(DomainError):
            poisson_sample(-1.0, make_rng(0))


class TestGenerateTwoGroup:
    def test_degenerate_mixture_is_all_null(self):
        d = generate_two_group(TwoGroupModel(1.3, 0.005, 3.0, 1e-9), 1000, seed=7)
        assert d.truth.sum() == 0

    def test_zero_fraction(self):
        m = TwoGroupModel(1.3, 0.005, 3.0, 0.05)
        d = generate_two_group(m, 100_000, seed=1)
        p0 = (1 - m.p) * 1.005 ** -1.3 + m.p * 4.005 ** -1.3
        se = math.sqrt(p0 * (1 - p0) / d.n)
        assert abs(np.mean(d.counts == 0) - p0) <= 3 * se

    def test_chi_square_against_marginal(self):
        m = TwoGroupModel(1.3, 0.005, 3.0, 0.05)
        d = generate_two_group(m, 100_000, seed=11)
        edges = 8
        obs = np.bincount(np.minimum(d.counts, edges), minlength=edges + 1)
        probs = m.marginal_pmf(np.arange(edges))
        probs = np.append(probs, 1 - probs.sum())
        exp = probs * d.n
        # Pool sparse cells so every expected count is at least 5.
        while exp[-1] < 5:
            exp[-2] += exp[-1]
            obs[-2] += obs[-1]
            exp, obs = exp[:-1], obs[:-1]
        assert stats.chisquare(obs, exp).pvalue > 1e-3

    def test_signal_conditional_mean(self):
        m = TwoGroupModel(1.3, 0.005, 3.0, 0.2)
        d = generate_two_group(m, 100_000, seed=3)
        ys = d.counts[d.truth == 1]
        mean = m.alpha * (m.beta + m.delta)
        # Var of a NB count: mean * (1 + scale)
        se = math.sqrt(mean * (1 + m.beta + m.delta) / ys.size)
        assert abs(ys.mean() - mean) <= 4 * se

    def test_deterministic(self):
        m = TwoGroupModel(1.5, 0.1, 2.0, 0.3)
        a = generate_two_group(m, 500, seed=42)
        b = generate_two_group(m, 500, seed=42)
        np.testing.assert_array_equal(a.counts, b.counts)
        np.testing.assert_array_equal(a.truth, b.truth)

    def test_keys_give_distinct_streams(self):
        m = TwoGroupModel(1.5, 0.1, 2.0, 0.3)
        a = generate_two_group(m, 500, seed=42, keys=(0,))
        b = generate_two_group(m, 500, seed=42, keys=(1,))
        assert not np.array_equal(a.counts, b.counts)

    def test_labels_binary(self):
        d = generate_two_group(TwoGroupModel(1.5, 0.1, 2.0, 0.3), 200, seed=9)
        assert set(np.unique(d.truth)) <= {0, 1}
        assert d.counts.shape == d.truth.shape and np.all(d.counts >= 0)

    def test_csv_round_trip(self, tmp_path):
        d = generate_two_group(TwoGroupModel(1.5, 0.1, 2.0, 0.3), 50, seed=9)
        path = tmp_path / "d.csv"
        d.to_csv(path)
        assert path.read_text().splitlines()[0] == "index,count,truth"
        back = GeneratedDataset.from_csv(path, seed=9)
        np.testing.assert_array_equal(back.counts, d.counts)
        np.testing.assert_array_equal(back.truth, d.truth)

    def test_invalid_n(self):
        with pytest.raises(DomainError):
            generate_two_group(TwoGroupModel(1.5, 0.1, 2.0, 0.3), 0, seed=1)
