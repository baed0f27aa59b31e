import json
from fractions import Fraction as F

import pytest

from exdyn import algebra, dist, models, statespace
from exdyn.errors import ConditioningError
from exdyn.models import (
    DualityFunction,
    ImmediateExchange,
    PoissonExchange,
    RandomWalkExchange,
    RestrictedExchange,
    duality_function,
    spec_label,
    transition_operator,
)
from exdyn.statespace import Space
from exdyn.verify import (
    CheckReport,
    check_detailed_balance,
    check_exchange_commutation,
    check_lumpability,
    check_projection_identity,
    check_self_duality,
    check_symmetry,
    cheap_duality,
    constructive_duality_check,
    reports_to_json,
    verify_all,
    verify_chain,
)


class TestCheckReport:
    def test_fail_needs_witness(self):
        with pytest.raises(ValueError):
            CheckReport("x", "m", (0,), "fail", "exact")

    def test_exact_pass_has_no_tolerance(self):
        r = CheckReport("x", "m", (0, 1), "pass", "exact")
        assert r.passed and "float" not in r.arithmetic

    def test_json_round_trip(self):
        r = CheckReport(
            "x", "m", (0, 1), "fail", "exact",
            witness={"lhs": F(1, 3), "state": (1, 0)},
        )
        payload = json.loads(reports_to_json([r]))
        assert payload[0]["witness"]["lhs"] == "1/3"
        assert payload[0]["witness"]["state"] == [1, 0]


class TestSelfDuality:
    def test_uniform_model_passes(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        r = check_self_duality(transition_operator(spec, 8), duality_function(spec), 8)
        assert r.verdict == "pass" and r.arithmetic == "exact"

    def test_perturbed_kernel_fails_with_witness(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        good = duality_function(spec)

        def broken(k, n):
            if (k, n) == (1, 2):
                return good.factors[0](k, n) + 1
            return good.factors[0](k, n)

        bad = DualityFunction((broken, good.factors[1]), good.family)
        r = check_self_duality(transition_operator(spec, 4), bad, 4)
        assert r.verdict == "fail"
        assert r.witness is not None and "lhs" in r.witness

    def test_mismatched_parameters_fail(self):
        spec = ImmediateExchange(1, 1, 2, 1)
        r = check_self_duality(transition_operator(spec, 3), duality_function(spec), 3)
        assert r.verdict == "fail"
        assert r.details["hypothesis_warning"]
        k, n = r.witness["dual_state"], r.witness["state"]
        assert sum(k) <= 3 and sum(n) <= 3

    def test_float_lane_tolerance(self):
        spec = ImmediateExchange(2**0.5, 1.0, 2**0.5, 2.0)
        pi = transition_operator(spec, 5, method="direct")
        r = check_self_duality(pi, duality_function(spec), 5)
        assert r.verdict == "pass"
        assert r.arithmetic.startswith("float")

    def test_float_lane_full_chain(self):
        import math

        spec = ImmediateExchange(math.sqrt(2), 1.0, math.sqrt(2), math.pi)
        for r in verify_chain(spec, 5):
            assert r.verdict == "pass" and r.arithmetic == "float(1e-12)", r.name


class TestDetailedBalance:
    def test_shared_first_parameter_gives_beta_binomial(self):
        spec = ImmediateExchange(2, 1, 2, 3)
        pi = transition_operator(spec, 8)
        r = check_detailed_balance(pi, models.stationary_pair_measure(spec, 8))
        assert r.verdict == "pass"

    def test_uniform_model_beta_binomial_2_2(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        mu = models.stationary_pair_measure(spec, 12)
        sec = Space(2).sector(12)
        bb = dist.beta_binomial_pmf(12, 2, 2)
        assert tuple(mu.vector(12)) == bb.mass
        r = check_detailed_balance(transition_operator(spec, 12, method="direct"), mu)
        assert r.verdict == "pass"

    def test_poisson_model_binomial_conditioning(self):
        spec = PoissonExchange(1, 2)
        mu = models.stationary_pair_measure(spec, 8)
        for total in range(9):
            expected = dist.binomial_pmf(total, F(2, 5)).mass
            assert tuple(mu.vector(total)) == expected
        r = check_detailed_balance(transition_operator(spec, 8), mu)
        assert r.verdict == "pass"

    def test_zero_mass_state_raises(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        pi = transition_operator(spec, 2)
        blocked = statespace.product_measure(
            Space(2), [lambda x: F(0) if x == 1 else F(1), lambda x: F(1)], 2
        )
        with pytest.raises(ConditioningError):
            check_detailed_balance(pi, blocked)

    def test_asymmetric_model_fails_with_witness(self):
        spec = ImmediateExchange(1, 1, 2, 1)
        pi = transition_operator(spec, 3)
        r = check_detailed_balance(pi, models.stationary_pair_measure(spec, 3))
        assert r.verdict == "fail" and r.witness is not None


class TestSymmetry:
    def test_identity_commutes(self):
        spec = RandomWalkExchange()
        pi = transition_operator(spec, 5)
        r = check_symmetry(pi, statespace.identity_operator(Space(2), 5))
        assert r.verdict == "pass"

    def test_uniform_model_full_triple(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        pi = transition_operator(spec, 8)
        for desc, op in models.pair_symmetries(spec, 8):
            r = check_symmetry(pi, op)
            assert r.passed, desc.alpha

    def test_capped_model_full_triple(self):
        spec = RestrictedExchange(2, 1, 2, 3)
        pi = transition_operator(spec, 8)
        for desc, op in models.pair_symmetries(spec, 8):
            assert check_symmetry(pi, op).passed

    def test_lowering_excludes_top_sector(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        pi = transition_operator(spec, 6)
        descs = models.pair_symmetries(spec, 6)
        lowering = [op for d, op in descs if d.alpha == "-"][0]
        r = check_symmetry(pi, lowering)
        assert r.verdict == "partial" and r.excluded == (6,)

    def test_poisson_weighted_creation_required(self):
        spec = PoissonExchange(1, 2)
        pi = transition_operator(spec, 5)
        weighted = [op for d, op in models.pair_symmetries(spec, 5) if d.alpha == "+"][0]
        assert check_symmetry(pi, weighted).passed
        unweighted = algebra.site_sum(
            algebra.ladder_operator("create", i, Space(2), 5) for i in range(2)
        )
        r = check_symmetry(pi, unweighted)
        assert r.verdict == "fail"


class TestProjectionIdentity:
    @pytest.mark.parametrize(
        "spec",
        [ImmediateExchange(2, 1, 2, 3), RandomWalkExchange(), PoissonExchange(1, 2)],
        ids=spec_label,
    )
    def test_families_pass(self, spec):
        r = check_projection_identity(
            models.redistribution_operator(spec, 6), models.pocket_measure(spec, 6)
        )
        assert r.verdict == "pass"

    def test_exchange_is_not_a_projection(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        exch = statespace.exchange_operator(models.pocket_space(spec), 4)
        r = check_projection_identity(exch, models.pocket_measure(spec, 4))
        assert r.verdict == "fail" and r.witness is not None


class TestExchangeCommutation:
    def test_shared_first_parameter_commutes(self):
        spec = ImmediateExchange(2, 1, 2, 3)
        pocket = models.pocket_space(spec)
        for desc in models.pocket_symmetry_descriptors(spec):
            sym = algebra.build_symmetry(desc, pocket, 5)
            assert check_exchange_commutation(sym, spec).passed

    def test_mismatched_first_parameters_fail(self):
        spec = ImmediateExchange(1, 1, 2, 1)
        pocket = models.pocket_space(spec)
        desc = models.pocket_symmetry_descriptors(spec)[0]
        sym = algebra.build_symmetry(desc, pocket, 3)
        r = check_exchange_commutation(sym, spec)
        assert r.verdict == "fail" and r.witness is not None

    def test_creation_sum_commutes_for_walkers(self):
        spec = RandomWalkExchange()
        pocket = models.pocket_space(spec)
        for desc in models.pocket_symmetry_descriptors(spec):
            sym = algebra.build_symmetry(desc, pocket, 5)
            assert check_exchange_commutation(sym, spec).passed


class TestConstructiveDuality:
    @pytest.mark.parametrize(
        "spec",
        [ImmediateExchange(1, 1, 1, 1), ImmediateExchange(2, 1, 2, 3)],
        ids=spec_label,
    )
    def test_exponential_action_reproduces_closed_form(self, spec):
        r = constructive_duality_check(spec, 8)
        assert r.verdict == "pass"
        assert r.details["per_variable_ratio"] == (F(1), F(1))

    def test_other_families(self):
        for spec in [RestrictedExchange(2, 1, 2, 3), RandomWalkExchange(), PoissonExchange(1, 2)]:
            assert constructive_duality_check(spec, 6).verdict == "pass"


class TestChains:
    def test_full_chain_all_families(self):
        for spec in [
            ImmediateExchange(1, 1, 1, 1),
            RestrictedExchange(2, 1, 2, 3),
            RandomWalkExchange(),
            PoissonExchange(1, 2),
        ]:
            reports = verify_chain(spec, 5)
            assert [r.name for r in reports] == [
                "projection-identity",
                "detailed-balance",
                "cheap-self-duality",
                "self-duality",
            ]
            assert all(r.verdict == "pass" for r in reports), spec_label(spec)

    def test_cheap_duality_is_diagonal(self):
        spec = RandomWalkExchange()
        d = cheap_duality(spec)
        assert d.factors[0](2, 2) == 2  # 1/w(2) = 2!
        assert d.factors[0](1, 2) == 0

    def test_verify_all_passes_for_uniform_model(self):
        reports = verify_all(ImmediateExchange(1, 1, 1, 1), 5)
        assert all(r.passed for r in reports)
        assert any(r.name == "split-exchange-lumpability" for r in reports)

    def test_lumpability_report(self):
        spec = ImmediateExchange(1, 1, 1, 1)
        exch = statespace.exchange_operator(models.pocket_space(spec), 4)
        r = check_lumpability(exch, spec)
        assert r.verdict == "fail" and "fiber" in r.witness


ALL_FAMILIES = [
    ImmediateExchange(1, 1, 1, 1),
    ImmediateExchange(2, 1, 2, 3),
    RestrictedExchange(2, 1, 2, 3),
    RandomWalkExchange(),
    PoissonExchange(1, 2),
]


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=spec_label)
def test_split_exchange_is_lumpable_for_every_family(spec):
    redist_exch = models.redistribution_operator(spec, 6) @ statespace.exchange_operator(
        models.pocket_space(spec), 6
    )
    assert check_lumpability(redist_exch, spec).verdict == "pass"


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=spec_label)
def test_redistribution_commutes_with_pocket_symmetries(spec):
    pocket = models.pocket_space(spec)
    redist = models.redistribution_operator(spec, 6)
    for desc in models.pocket_symmetry_descriptors(spec):
        sym = algebra.build_symmetry(desc, pocket, 6)
        assert check_symmetry(redist, sym).passed, desc.alpha
