from fractions import Fraction as F
from math import comb, factorial

import numpy as np
import pytest

from exdyn import models, statespace
from exdyn.errors import CapacityError, ConditioningError, LumpabilityError
from exdyn.statespace import (
    Space,
    addition_map,
    exchange_map,
    exchange_operator,
    fiber,
    lift_function,
    lift_operator,
    lump_operator,
    merge_state,
    merged_space,
    mu_canonical_inverse,
    mu_inverse_operator,
    product_measure,
    push_forward,
)

PAIR = Space(2)
POCKET = Space(4)


def rational_stream(seed):
    rng = np.random.default_rng(seed)

    def draw():
        return F(int(rng.integers(-9, 10)), int(rng.integers(1, 8)))

    return draw


class TestMaps:
    def test_exchange_swaps_tops(self):
        assert exchange_map((1, 2, 3, 4)) == (3, 2, 1, 4)

    def test_exchange_is_involution(self):
        for s in POCKET.sector(6).states:
            assert exchange_map(exchange_map(s)) == s

    def test_exchange_fixes_origin(self):
        assert exchange_map((0, 0, 0, 0)) == (0, 0, 0, 0)

    def test_exchange_capacity_violation(self):
        with pytest.raises(CapacityError):
            exchange_map((0, 0, 3, 1), caps=(2, 1, 3, 1))

    def test_addition(self):
        assert addition_map((1, 2, 3, 4)) == (3, 7)
        assert addition_map((0, 0, 0, 0)) == (0, 0)

    def test_fiber_size(self):
        for n1 in range(5):
            for n2 in range(5):
                assert len(list(fiber((n1, n2)))) == (n1 + 1) * (n2 + 1)

    def test_merge_state(self):
        assert merge_state((1, 2, 3, 4)) == (3, 7)
        assert merge_state((2, 5)) == (7,)


class TestSectors:
    def test_pair_sector_count(self):
        for n in range(31):
            assert PAIR.sector(n).dim == n + 1

    def test_pocket_sector_count(self):
        for n in range(31):
            assert POCKET.sector(n).dim == comb(n + 3, 3)

    def test_lexicographic_and_stable(self):
        sec = POCKET.sector(5)
        assert list(sec.states) == sorted(sec.states)
        assert POCKET.sector(5) is sec  # cached

    def test_capped_sector_excludes_states(self):
        space = Space(4, (2, 1, 2, 3))
        sec = space.sector(4)
        assert all(s[0] <= 2 and s[1] <= 1 and s[2] <= 2 and s[3] <= 3 for s in sec.states)
        assert sec.dim < POCKET.sector(4).dim

    def test_negative_total_is_empty(self):
        assert PAIR.sector(-1).dim == 0

    def test_merged_space_caps(self):
        assert merged_space(Space(4, (2, 1, 2, 3))).caps == (3, 5)
        assert merged_space(POCKET).caps is None


def uniform_measure(nmax=8):
    return product_measure(POCKET, [lambda x: F(1, factorial(x))] * 4, nmax)


class TestMeasure:
    def test_sector_normalization(self):
        mu = uniform_measure(6)
        for n in range(7):
            assert sum(mu.blocks[n]) == 1

    def test_push_forward_marginalizes(self):
        mu = uniform_measure(6)
        tilde = push_forward(mu)
        for n in range(7):
            sec = POCKET.sector(n)
            dst = PAIR.sector(n)
            for j, p in enumerate(dst.states):
                total = sum(
                    mu.blocks[n][i] for i, s in enumerate(sec.states) if addition_map(s) == p
                )
                assert tilde.blocks[n][j] == total

    def test_zero_sector_raises(self):
        with pytest.raises(ConditioningError):
            product_measure(POCKET, [lambda x: F(x)] * 4, 3)


class TestLiftAndInverse:
    def test_lift_constant(self):
        lifted = lift_function(lambda p: F(1))
        assert all(lifted(s) == 1 for s in POCKET.sector(4).states)

    def test_lift_coordinate(self):
        lifted = lift_function(lambda p: p[0])
        for s in POCKET.sector(5).states:
            assert lifted(s) == s[0] + s[1]

    def test_inverse_after_lift_is_identity(self):
        # property (a) of the measure-weighted inverse
        draw = rational_stream(1)
        mu = uniform_measure(10)
        for total in range(11):
            values = {p: draw() for p in PAIR.sector(total).states}
            f = lambda p: values[p]
            recovered = mu_canonical_inverse(mu, lift_function(f))
            for p in PAIR.sector(total).states:
                assert recovered(p) == values[p]

    def test_integral_identity(self):
        # property (c): averaging the inverse against the image measure
        draw = rational_stream(2)
        mu = uniform_measure(8)
        tilde = push_forward(mu)
        for total in range(9):
            sec = POCKET.sector(total)
            values = {s: draw() for s in sec.states}
            g = lambda s: values[s]
            inv = mu_canonical_inverse(mu, g)
            lhs = sum(
                inv(p) * tilde.blocks[total][i]
                for i, p in enumerate(PAIR.sector(total).states)
            )
            rhs = sum(values[s] * mu.blocks[total][i] for i, s in enumerate(sec.states))
            assert lhs == rhs

    def test_product_rule(self):
        # property (d): lifted factors pull out of the inverse
        draw = rational_stream(3)
        mu = uniform_measure(8)
        for total in range(9):
            fvals = {p: draw() for p in PAIR.sector(total).states}
            gvals = {s: draw() for s in POCKET.sector(total).states}
            f = lambda p: fvals[p]
            g = lambda s: gvals[s]
            lifted_f = lift_function(f)
            lhs = mu_canonical_inverse(mu, lambda s: lifted_f(s) * g(s))
            rhs_inv = mu_canonical_inverse(mu, g)
            for p in PAIR.sector(total).states:
                assert lhs(p) == f(p) * rhs_inv(p)

    def test_zero_mass_fiber_raises(self):
        # both of agent 1's pockets refuse a single unit, so the fiber over
        # (1, 0) carries no mass while every sector still has some
        blocked = lambda x: F(0) if x == 1 else F(1)
        ones = lambda x: F(1)
        mu = product_measure(POCKET, [blocked, blocked, ones, ones], 4)
        inv = mu_canonical_inverse(mu, lambda s: F(1))
        with pytest.raises(ConditioningError):
            inv((1, 0))
        with pytest.raises(ConditioningError):
            mu_inverse_operator(mu)


class TestOperators:
    def test_lift_then_inverse_operator_is_identity(self):
        mu = uniform_measure(6)
        inv = mu_inverse_operator(mu)
        lift = lift_operator(POCKET, 6)
        composed = inv @ lift
        ident = statespace.identity_operator(PAIR, 6)
        assert composed.equals(ident)

    def test_exchange_operator_total_when_caps_match(self):
        space = Space(4, (2, 1, 2, 3))
        op = exchange_operator(space, 5)
        assert (op @ op).equals(statespace.identity_operator(space, 5))

    def test_exchange_operator_rejects_cap_mismatch(self):
        with pytest.raises(CapacityError):
            exchange_operator(Space(4, (2, 1, 3, 1)), 4)

    def test_matmul_shift_bookkeeping(self):
        lift = lift_operator(POCKET, 5)
        inv = mu_inverse_operator(uniform_measure(5))
        proj = lift @ inv
        assert proj.shift == 0
        assert proj.domain == proj.codomain == POCKET


class TestLumping:
    def test_identity_lumps_to_identity(self):
        ident = statespace.identity_operator(POCKET, 6)
        lumped, cert = lump_operator(ident)
        assert cert.lumpable
        assert lumped.equals(statespace.identity_operator(PAIR, 6))

    def test_split_exchange_lumps_to_transition_operator(self):
        spec = models.ImmediateExchange(1, 1, 1, 1)
        redist = models.redistribution_operator(spec, 8)
        exch = exchange_operator(POCKET, 8)
        lumped, cert = lump_operator(redist @ exch, mu=models.pocket_measure(spec, 8))
        assert cert.lumpable
        direct = models.transition_operator(spec, 8, method="direct")
        assert lumped.equals(direct)

    def test_exchange_alone_is_not_lumpable(self):
        exch = exchange_operator(POCKET, 5)
        with pytest.raises(LumpabilityError) as err:
            lump_operator(exch)
        witness = err.value.certificate.witness
        assert witness is not None
        assert "fiber" in witness and "values" in witness

    def test_lumping_sector_shifting_symmetries(self):
        from exdyn import algebra

        spec = models.ImmediateExchange(1, 1, 1, 1)
        for desc in models.pocket_symmetry_descriptors(spec):
            sym = algebra.build_symmetry(desc, POCKET, 8)
            lumped, cert = lump_operator(sym, mu=models.pocket_measure(spec, 8))
            assert cert.lumpable
            direct = algebra.build_symmetry(algebra.merge_descriptor(desc), PAIR, 8)
            common = sorted(set(lumped.blocks) & set(direct.blocks))
            assert lumped.restricted(common).equals(direct.restricted(common))

    def test_lumping_is_a_homomorphism_on_commutators(self):
        from exdyn import algebra

        spec = models.ImmediateExchange(1, 1, 1, 1)
        redist = models.redistribution_operator(spec, 6)
        exch = exchange_operator(POCKET, 6)
        b = redist @ exch
        c = algebra.build_symmetry(
            models.pocket_symmetry_descriptors(spec)[2], POCKET, 6
        )  # diagonal member, shift 0
        bc = algebra.commutator(b, c).operator
        lumped_bc, _ = lump_operator(bc)
        lumped_b, _ = lump_operator(b)
        lumped_c, _ = lump_operator(c)
        direct = algebra.commutator(lumped_b, lumped_c).operator
        common = sorted(set(lumped_bc.blocks) & set(direct.blocks))
        assert lumped_bc.restricted(common).equals(direct.restricted(common))
