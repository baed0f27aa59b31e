from fractions import Fraction as F
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exdyn import dist
from exdyn.errors import CapacityError, ParameterError
from exdyn.exact import rising


class TestPmf:
    def test_masses_sum_to_one(self):
        pmf = dist.Pmf((0, 1), (F(1, 3), F(2, 3)))
        assert pmf.exact

    def test_rejects_bad_total(self):
        with pytest.raises(ParameterError):
            dist.Pmf((0, 1), (F(1, 3), F(1, 3)))

    def test_rejects_negative_mass(self):
        with pytest.raises(ParameterError):
            dist.Pmf((0, 1), (F(-1, 3), F(4, 3)))

    def test_tail_counts_toward_total(self):
        pmf = dist.Pmf((0,), (F(3, 4),), tail=F(1, 4))
        assert pmf.tail == F(1, 4)

    def test_prob_outside_support_is_zero(self):
        pmf = dist.Pmf((0, 1), (F(1, 2), F(1, 2)))
        assert pmf.prob(5) == 0


class TestBetaBinomial:
    def test_uniform_when_shapes_are_one(self):
        pmf = dist.beta_binomial_pmf(3, 1, 1)
        assert pmf.mass == (F(1, 4),) * 4

    def test_empty_split(self):
        assert dist.beta_binomial_pmf(0, 5, 7).mass == (F(1),)

    def test_symmetric_shape_two(self):
        # C(2,1) (2)^(1) (2)^(1) / (4)^(2) = 8/20
        assert dist.beta_binomial_pmf(2, 2, 2).prob(1) == F(2, 5)

    def test_uniform_family_up_to_fifty(self):
        for n in range(51):
            pmf = dist.beta_binomial_pmf(n, 1, 1)
            assert pmf.mass == (F(1, n + 1),) * (n + 1)

    def test_rejects_nonpositive_shapes(self):
        with pytest.raises(ParameterError):
            dist.beta_binomial_pmf(3, 0, 1)
        with pytest.raises(ParameterError):
            dist.beta_binomial_pmf(3, 1, F(-1, 2))

    @given(
        n=st.integers(0, 25),
        s=st.fractions(min_value=F(1, 7), max_value=8, max_denominator=9),
        t=st.fractions(min_value=F(1, 7), max_value=8, max_denominator=9),
    )
    @settings(max_examples=60, deadline=None)
    def test_total_mass_exact(self, n, s, t):
        assert sum(dist.beta_binomial_pmf(n, s, t).mass) == 1

    def test_float_shapes_fall_back_to_floats(self):
        pmf = dist.beta_binomial_pmf(4, 2**0.5, 1.0)
        assert not pmf.exact
        assert abs(sum(pmf.mass) - 1.0) < 1e-12


class TestHypergeometric:
    def test_two_coins_two_slots_each(self):
        assert dist.hypergeometric_pmf(2, 2, 2).prob(1) == F(2, 3)

    def test_full_pockets_forced(self):
        pmf = dist.hypergeometric_pmf(5, 2, 3)
        assert pmf.prob(2) == 1

    def test_one_coin_symmetric(self):
        pmf = dist.hypergeometric_pmf(1, 1, 1)
        assert pmf.prob(0) == pmf.prob(1) == F(1, 2)

    def test_overfull_raises(self):
        with pytest.raises(CapacityError):
            dist.hypergeometric_pmf(6, 2, 3)

    def test_support_capped_by_gamma(self):
        pmf = dist.hypergeometric_pmf(4, 2, 3)
        assert pmf.support == (0, 1, 2)
        assert pmf.prob(0) == 0  # needs 4 coins in 3 slots


class TestDiscreteGamma:
    def test_shape_two_first_weight(self):
        pmf = dist.discrete_gamma_pmf(2, F(1, 2), 10)
        assert pmf.prob(1) == F(1, 4)

    def test_zero_term_is_normalization(self):
        for beta, lam in [(1, F(1, 3)), (3, F(2, 5))]:
            pmf = dist.discrete_gamma_pmf(beta, lam, 8)
            assert pmf.prob(0) == (1 - lam) ** beta

    def test_truncation_tail_is_tiny(self):
        pmf = dist.discrete_gamma_pmf(2, F(1, 2), 50)
        assert pmf.exact
        assert pmf.tail < F(1, 10**12)
        assert sum(pmf.mass) + pmf.tail == 1

    def test_lambda_out_of_range(self):
        with pytest.raises(ParameterError):
            dist.discrete_gamma_pmf(2, F(3, 2), 5)
        with pytest.raises(ParameterError):
            dist.discrete_gamma_pmf(2, 0, 5)

    def test_fractional_shape_uses_floats(self):
        pmf = dist.discrete_gamma_pmf(F(3, 2), F(1, 2), 60)
        assert not pmf.exact
        assert abs(sum(pmf.mass) + pmf.tail - 1.0) < 1e-9
        # cross-check one weight against the closed form
        expected = (0.5**1.5) * 0.5 * 1.5
        assert pmf.prob(1) == pytest.approx(expected, rel=1e-12)


class TestBinomial:
    def test_half_split(self):
        assert dist.binomial_pmf(2, F(1, 2)).mass == (F(1, 4), F(1, 2), F(1, 4))

    def test_empty(self):
        assert dist.binomial_pmf(0, F(1, 3)).mass == (F(1),)

    def test_third(self):
        assert dist.binomial_pmf(3, F(1, 3)).prob(1) == F(12, 27)

    def test_p_out_of_range(self):
        with pytest.raises(ParameterError):
            dist.binomial_pmf(3, F(3, 2))


class TestConditioning:
    """Product laws conditioned on their sum reduce to the splitting laws."""

    @pytest.mark.parametrize("beta1,beta2", [(2, 2), (1, 3), (3, 5)])
    def test_gamma_product_conditions_to_beta_binomial(self, beta1, beta2):
        lam = F(1, 3)
        for total in range(21):
            weights = [
                lam**k * rising(F(beta1), k) / factorial(k)
                * lam ** (total - k) * rising(F(beta2), total - k) / factorial(total - k)
                for k in range(total + 1)
            ]
            z = sum(weights)
            conditioned = tuple(w / z for w in weights)
            assert conditioned == dist.beta_binomial_pmf(total, beta1, beta2).mass

    def test_poisson_product_conditions_to_binomial(self):
        q, lam = F(2, 3), F(1, 7)
        for total in range(15):
            weights = [
                lam**k / factorial(k) * (q * lam) ** (total - k) / factorial(total - k)
                for k in range(total + 1)
            ]
            z = sum(weights)
            conditioned = tuple(w / z for w in weights)
            assert conditioned == dist.binomial_pmf(total, 1 / (1 + q)).mass

    def test_binomial_product_conditions_to_hypergeometric(self):
        gamma, delta = 3, 4
        theta = F(2, 5)
        for total in range(gamma + delta + 1):
            weights = [
                F(comb(gamma, k)) * theta**k * F(comb(delta, total - k)) * theta ** (total - k)
                if k <= gamma and total - k <= delta
                else F(0)
                for k in range(total + 1)
            ]
            z = sum(weights)
            hyp = dist.hypergeometric_pmf(total, gamma, delta)
            for k in range(total + 1):
                assert weights[k] / z == hyp.prob(k)


class TestSampling:
    def test_degenerate(self):
        pmf = dist.Pmf((0,), (F(1),))
        rng = np.random.default_rng(0)
        assert all(dist.sample(pmf, rng) == 0 for _ in range(100))

    def test_deterministic_given_seed(self):
        pmf = dist.beta_binomial_pmf(6, 2, 3)
        rng = np.random.default_rng(42)
        seq1 = [dist.sample(pmf, rng) for _ in range(50)]
        rng = np.random.default_rng(42)
        seq2 = [dist.sample(pmf, rng) for _ in range(50)]
        assert seq1 == seq2

    def test_uniform_frequencies_large_sample(self):
        pmf = dist.beta_binomial_pmf(3, 1, 1)
        rng = np.random.default_rng(7)
        draws = dist.sample_many(pmf, rng, 10**6)
        for k in range(4):
            freq = np.count_nonzero(draws == k) / 10**6
            assert abs(freq - 0.25) < 0.003  # five sigma

    def test_sample_matches_law_loosely(self):
        pmf = dist.binomial_pmf(4, F(1, 3))
        rng = np.random.default_rng(3)
        draws = [dist.sample(pmf, rng) for _ in range(20000)]
        for k in pmf.support:
            freq = draws.count(k) / len(draws)
            assert abs(freq - float(pmf.prob(k))) < 0.02
