
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnnsearch.encoding import (
    Architecture,
    Genotype,
    Scheme,
    SearchSpace,
    decode,
    enumerate_genotypes,
    genotype_length,
    is_feasible,
    is_well_formed,
    penalty,
    random_mutation,
    sample_lhs,
    sample_uniform,
)
from rnnsearch.exceptions import EmptyArchitecture


def zeros_before_last_nonzero(slots):
    """Independent penalty oracle: zero slots with any enabled slot after them."""
    return sum(1 for i, v in enumerate(slots) if v == 0 and any(w != 0 for w in slots[i + 1 :]))


def canonical_plain(g: Genotype, m: int) -> Genotype:
    layers = [v for v in g.values[:m] if v > 0]
    vals = tuple(layers) + (0,) * (m - len(layers)) + (g.values[-1],)
    return Genotype(vals, Scheme.PLAIN)


PLAIN5 = SearchSpace(Scheme.PLAIN, 5, 1, 100, 30)
FLAG3 = SearchSpace(Scheme.FLAG, 3, 1, 100, 30)
SIZE3 = SearchSpace(Scheme.SIZE, 3, 1, 100, 30)


class TestGenotypeLength:
    def test_plain(self):
        assert genotype_length(PLAIN5) == 6

    def test_flag(self):
        assert genotype_length(FLAG3) == 7

    def test_size(self):
        assert genotype_length(SearchSpace(Scheme.SIZE, 1, 1, 100, 30)) == 3


class TestDecode:
    def test_plain_skips_zeros(self):
        g = Genotype((3, 7, 0, 0, 4, 10), Scheme.PLAIN)
        assert decode(g, PLAIN5) == Architecture((3, 7, 4), 10)

    def test_flag_mask(self):
        g = Genotype((3, 1, 7, 0, 4, 1, 10), Scheme.FLAG)
        assert decode(g, FLAG3) == Architecture((3, 4), 10)

    def test_size_prefix(self):
        g = Genotype((5, 9, 2, 2, 7), Scheme.SIZE)
        assert decode(g, SIZE3) == Architecture((5, 9), 7)

    def test_plain_all_zero_raises(self):
        with pytest.raises(EmptyArchitecture):
            decode(Genotype((0, 0, 0, 0, 0, 5), Scheme.PLAIN), PLAIN5)

    def test_flag_all_off_raises(self):
        with pytest.raises(EmptyArchitecture):
            decode(Genotype((3, 0, 7, 0, 4, 0, 5), Scheme.FLAG), FLAG3)


class TestFeasibility:
    def test_plain_trailing_zeros_feasible(self):
        assert is_feasible(Genotype((3, 7, 4, 0, 0, 10), Scheme.PLAIN), PLAIN5)

    def test_plain_interleaved_zero_infeasible(self):
        assert not is_feasible(Genotype((3, 7, 0, 0, 4, 10), Scheme.PLAIN), PLAIN5)

    def test_plain_all_zero_infeasible(self):
        assert not is_feasible(Genotype((0, 0, 0, 0, 0, 10), Scheme.PLAIN), PLAIN5)

    def test_flag_applies_mask_before_rule(self):
        # masked form [0, 7, 4]: a zero precedes enabled layers
        assert not is_feasible(Genotype((3, 0, 7, 1, 4, 1, 10), Scheme.FLAG), FLAG3)
        # masked form [3, 7, 0]: zeros trail
        assert is_feasible(Genotype((3, 1, 7, 1, 4, 0, 10), Scheme.FLAG), FLAG3)

    def test_size_always_feasible(self):
        for vals in [(5, 9, 2, 2, 7), (1, 1, 1, 3, 30), (100, 1, 50, 1, 2)]:
            assert is_feasible(Genotype(vals, Scheme.SIZE), SIZE3)


class TestPenalty:
    def test_seen_genotype_costs_full_length(self):
        g = Genotype((3, 7, 0, 0, 4, 10), Scheme.PLAIN)
        assert penalty(g, {g}) == 6

    def test_interleaved_zeros_counted(self):
        g = Genotype((3, 7, 0, 0, 4, 10), Scheme.PLAIN)
        assert penalty(g, set()) == 2

    def test_canonical_form_costs_nothing(self):
        assert penalty(Genotype((3, 7, 4, 0, 0, 10), Scheme.PLAIN), set()) == 0

    def test_flag_masked_zeros_counted_but_not_bits(self):
        # masked [0, 7]: one zero before an enabled slot; the 0 bits are not zeros
        g = Genotype((5, 0, 7, 1, 10), Scheme.FLAG)
        assert penalty(g, set()) == 1

    def test_lookback_slot_never_counted(self):
        g = Genotype((0, 0, 0, 0, 0, 10), Scheme.PLAIN)
        assert penalty(g, set()) == 0

    def test_size_scheme_is_free(self):
        assert penalty(Genotype((5, 9, 2, 2, 7), Scheme.SIZE), set()) == 0


class TestExhaustiveTinySpace:
    """Brute-force sweep of the plain space m=3, units in [1,2], lookback <= 2."""

    SPACE = SearchSpace(Scheme.PLAIN, 3, 1, 2, 2, lookback_min=1)

    def test_decode_groups_by_canonical_form(self):
        for g in enumerate_genotypes(self.SPACE):
            canon = canonical_plain(g, 3)
            try:
                got = decode(g, self.SPACE)
            except EmptyArchitecture:
                assert all(v == 0 for v in g.values[:3])
                continue
            assert got == decode(canon, self.SPACE)
            assert is_feasible(g, self.SPACE) == (g == canon)

    def test_penalty_matches_zero_count_oracle(self):
        for g in enumerate_genotypes(self.SPACE):
            assert penalty(g, set()) == zeros_before_last_nonzero(g.values[:3])
            assert penalty(g, {g}) == 4

    def test_feasible_implies_zero_penalty(self):
        for g in enumerate_genotypes(self.SPACE):
            if is_feasible(g, self.SPACE):
                assert penalty(g, set()) == 0


class TestLatinHypercube:
    def test_ten_samples_cover_ten_decades(self):
        space = SearchSpace(Scheme.SIZE, 1, 1, 100, 30)
        genos = sample_lhs(space, 10, np.random.default_rng(0))
        assert len(genos) == 10
        decades = {(g.values[0] - 1) // 10 for g in genos}
        assert decades == set(range(10))

    def test_single_sample(self):
        genos = sample_lhs(PLAIN5, 1, np.random.default_rng(1))
        assert len(genos) == 1
        assert is_well_formed(genos[0], PLAIN5)

    @pytest.mark.parametrize("space", [PLAIN5, FLAG3, SIZE3])
    def test_outputs_well_formed(self, space):
        for g in sample_lhs(space, 25, np.random.default_rng(2)):
            assert is_well_formed(g, space)

    def test_fixed_seed_reproducible(self):
        a = sample_lhs(FLAG3, 12, np.random.default_rng(33))
        b = sample_lhs(FLAG3, 12, np.random.default_rng(33))
        assert a == b

    def test_lookback_within_sampling_bounds(self):
        for g in sample_lhs(SIZE3, 40, np.random.default_rng(4)):
            assert 2 <= g.values[-1] <= 30


class TestMutation:
    def test_changes_exactly_one_slot(self):
        rng = np.random.default_rng(5)
        g = sample_uniform(PLAIN5, rng)
        for _ in range(50):
            g2 = random_mutation(g, PLAIN5, rng)
            assert sum(a != b for a, b in zip(g.values, g2.values)) == 1
            assert is_well_formed(g2, PLAIN5)

    def test_flag_bit_slot_stays_binary(self):
        rng = np.random.default_rng(6)
        g = sample_uniform(FLAG3, rng)
        for _ in range(100):
            g2 = random_mutation(g, FLAG3, rng)
            for i in range(3):
                assert g2.values[2 * i + 1] in (0, 1)
            g = g2

    def test_exhaustive_reachability_tiny_space(self):
        # every genotype reaches every other through one-slot changes
        space = SearchSpace(Scheme.PLAIN, 1, 1, 3, 2, lookback_min=1)
        nodes = enumerate_genotypes(space)
        assert len(nodes) == 8  # units {0,1,2,3} x lookback {1,2}
        def neighbors(g):
            out = []
            for other in nodes:
                if sum(a != b for a, b in zip(g.values, other.values)) == 1:
                    out.append(other)
            return out
        seen = {nodes[0]}
        frontier = [nodes[0]]
        while frontier:
            nxt = []
            for g in frontier:
                for nb in neighbors(g):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
            frontier = nxt
        assert seen == set(nodes)

    def test_random_walk_visits_every_genotype(self):
        space = SearchSpace(Scheme.PLAIN, 1, 1, 3, 2, lookback_min=1)
        rng = np.random.default_rng(7)
        g = sample_uniform(space, rng)
        visited = {g}
        for _ in range(400):
            g = random_mutation(g, space, rng)
            visited.add(g)
        assert visited == set(enumerate_genotypes(space))


@st.composite
def small_spaces(draw):
    scheme = draw(st.sampled_from(list(Scheme)))
    m = draw(st.integers(1, 4))
    lo = draw(st.integers(1, 4))
    hi = draw(st.integers(lo, lo + 5))
    t_max = draw(st.integers(2, 8))
    lb_min = draw(st.integers(1, min(2, t_max)))
    return SearchSpace(scheme, m, lo, hi, t_max, lookback_min=lb_min)


@st.composite
def space_and_genotype(draw):
    space = draw(small_spaces())
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    return space, sample_uniform(space, rng)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(space_and_genotype())
    def test_decode_never_empty_or_raises(self, sg):
        space, g = sg
        try:
            arch = decode(g, space)
        except EmptyArchitecture:
            assert space.scheme is not Scheme.SIZE
            return
        assert 1 <= len(arch.layer_sizes) <= space.max_layers
        assert all(space.neuron_lo <= s <= space.neuron_hi for s in arch.layer_sizes)
        assert arch.lookback == g.values[-1]

    @settings(max_examples=200, deadline=None)
    @given(space_and_genotype())
    def test_feasible_means_unpenalized(self, sg):
        space, g = sg
        if is_feasible(g, space):
            assert penalty(g, set()) == 0
        assert penalty(g, {g}) == genotype_length(space)

    @settings(max_examples=100, deadline=None)
    @given(space_and_genotype())
    def test_size_scheme_never_penalized(self, sg):
        space, g = sg
        if space.scheme is Scheme.SIZE:
            assert is_feasible(g, space)
            assert penalty(g, set()) == 0

    @settings(max_examples=100, deadline=None)
    @given(space_and_genotype())
    def test_mutation_preserves_well_formedness(self, sg):
        space, g = sg
        g2 = random_mutation(g, space, np.random.default_rng(0))
        assert is_well_formed(g2, space)
