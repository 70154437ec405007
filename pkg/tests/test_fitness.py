import itertools
import math
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_error, trees
from rlsgp.errors import EmptyTreeError, TooManyVariables
from rlsgp.fitness import (
    Estimate,
    ProblemSpec,
    Sample,
    Target,
    TruthTableFitness,
    closed_form_error,
    draw_sample,
    exact_error,
    generalisation_error,
    sampled_error,
    semantically_equal,
)
from rlsgp.mutation import MutationConfig, enumerate_moves, apply_move
from rlsgp.rng import RandomStream
from rlsgp.tree import EMPTY, Leaf, Literal, Node, Op, dual, parse


def spec(n, target=Target.AND, negations=False):
    return ProblemSpec(target, n, negations)


def conjunction(indices):
    it = iter(indices)
    t = Leaf(Literal(next(it)))
    for i in it:
        t = Node(Op.AND, t, Leaf(Literal(i)))
    return t


def swap_ops(t):
    if isinstance(t, Leaf):
        return t
    return Node(Op.OR if t.op is Op.AND else Op.AND, swap_ops(t.left), swap_ops(t.right))


class TestExactError:
    def test_partial_conjunction(self):
        assert exact_error(parse("(and x1 x2)"), spec(4)) == 3

    def test_full_conjunction(self):
        assert exact_error(conjunction(range(1, 8)), spec(7)) == 0

    def test_or_of_and(self):
        assert exact_error(parse("(or (and x1 x2) x3)"), spec(3)) == 4

    def test_contradiction_wrong_once(self):
        assert exact_error(parse("(and x1 !x1)"), spec(5, negations=True)) == 1

    def test_empty_rejected(self):
        with pytest.raises(EmptyTreeError):
            exact_error(EMPTY, spec(3))

    def test_large_n_is_exact(self):
        # 2**64 - 2**62 inputs; only integers can hold it
        assert exact_error(parse("(and x1 x2)"), spec(64)) == 2**62 - 1

    def test_variable_cap(self):
        with pytest.raises(TooManyVariables):
            exact_error(conjunction(range(1, 32)), spec(40))

    @given(trees(n=6, max_leaves=12), st.sampled_from(Target))
    def test_projection_matches_brute_force(self, t, target):
        assert exact_error(t, spec(6, target, True)) == brute_error(t, 6, target.value)

    @given(trees(n=5), st.sampled_from(Target))
    def test_range_and_zero_iff_equivalent(self, t, target):
        e = exact_error(t, spec(5, target, True))
        assert 0 <= e <= 32
        target_tree = conjunction(range(1, 6))
        if target is Target.OR:
            target_tree = swap_ops(target_tree)
        assert (e == 0) == semantically_equal(t, target_tree)

    @given(trees(n=5))
    def test_and_or_duality(self, t):
        # swapping AND/OR alone gives t'(x) = not t(not x); flipping every input bit
        # maps AND-target disagreements one-to-one onto OR-target ones
        assert exact_error(t, spec(5, Target.AND, True)) == exact_error(swap_ops(t), spec(5, Target.OR, True))

    @given(trees(n=5))
    def test_full_dual_is_the_negation(self, t):
        # dual(t) = not t, so it is wrong on OR exactly where t is right
        assert exact_error(dual(t), spec(5, Target.OR, True)) == 32 - brute_error(t, 5, "or")


class TestClosedForm:
    def test_examples(self):
        assert closed_form_error(2, 4) == 3
        assert closed_form_error(9, 9) == 0

    def test_a_above_n(self):
        with pytest.raises(ValueError):
            closed_form_error(5, 4)

    def test_random_conjunctions(self):
        rnd = random.Random(5)
        for _ in range(50):
            n = rnd.randint(1, 40)
            vs = rnd.sample(range(1, n + 1), rnd.randint(1, min(n, 30)))
            assert exact_error(conjunction(vs), spec(n)) == closed_form_error(len(vs), n)


class TestSamples:
    def test_zero_rows_rejected(self):
        with pytest.raises(ValueError):
            draw_sample(3, 0, RandomStream(0))

    def test_deterministic(self):
        a = draw_sample(10, 100, RandomStream(9))
        b = draw_sample(10, 100, RandomStream(9))
        assert a == b and len(a) == 100 and a.n == 10

    def test_uniform_rows(self):
        rows = 100_000
        sample = draw_sample(3, rows, RandomStream(11))
        freq = Counter(sample.rows())
        sd = math.sqrt(rows * (1 / 8) * (7 / 8))
        assert len(freq) == 8
        for c in freq.values():
            assert abs(c - rows / 8) <= 4 * sd

    def test_rows_roundtrip(self):
        rows = [(1, 0, 1), (0, 0, 0), (1, 1, 1)]
        s = Sample.from_rows(rows)
        assert [tuple(map(int, r)) for r in s.rows()] == rows


class TestSampledError:
    def test_all_true_row(self):
        s = Sample.from_rows([(True,) * 6])
        assert sampled_error(parse("(or (and x1 x4) x2)"), spec(6), s) == 0

    def test_single_leaf_full_table(self):
        s = Sample.from_rows(itertools.product((0, 1), repeat=2))
        assert sampled_error(parse("x1"), spec(2), s) == 1

    def test_exact_target(self):
        s = draw_sample(5, 300, RandomStream(2))
        assert sampled_error(conjunction(range(1, 6)), spec(5), s) == 0

    @given(trees(n=5), st.sampled_from(Target))
    def test_complete_sample_equals_exact(self, t, target):
        p = spec(5, target, True)
        assert sampled_error(t, p, Sample.complete(5)) == exact_error(t, p)

    @given(trees(n=4), st.integers(1, 40), st.integers(0, 2**32))
    def test_bounded_by_rows(self, t, s, seed):
        e = sampled_error(t, spec(4, negations=True), draw_sample(4, s, RandomStream(seed)))
        assert 0 <= e <= s

    def test_expectation_is_s_times_generalisation(self):
        t, p, s, reps = parse("(and x1 (or x2 x3))"), spec(4), 20, 10_000
        g = generalisation_error(t, p)
        rng = RandomStream(77)
        xs = [sampled_error(t, p, draw_sample(4, s, rng)) for _ in range(reps)]
        mean = sum(xs) / reps
        se = math.sqrt(s * float(g) * (1 - float(g)) / reps)
        assert abs(mean - s * float(g)) <= 4 * se


class TestGeneralisation:
    def test_exact_rational(self):
        g = generalisation_error(parse("(and x1 x2)"), spec(4))
        assert g == Fraction(3, 16) and isinstance(g, Fraction)

    def test_target(self):
        assert generalisation_error(conjunction(range(1, 5)), spec(4)) == 0

    def test_fallback_is_flagged(self):
        t = parse("(or x31 x1)")
        for i in range(2, 31):
            t = Node(Op.OR, t, Leaf(Literal(i)))
        g = generalisation_error(t, spec(40, Target.OR), RandomStream(3))
        assert isinstance(g, Estimate) and not g.exact
        assert g.value == 0.0 or g.stderr > 0


class TestIncrementalFitness:
    @given(trees(n=4, max_leaves=8), st.sampled_from(Target))
    def test_offspring_error_matches_exact(self, t, target):
        p = spec(4, target, True)
        fit = TruthTableFitness(p)
        f = fit(t)
        assert f == exact_error(t, p)
        for move, _ in enumerate_moves(t, MutationConfig.standard(4, True)):
            child = apply_move(t, move)
            spine = (move.at[:-1] if move.at else ()) if move.operation.name == "DEL" else move.at
            want = (1 << 4) if child is EMPTY else exact_error(child, p)
            assert fit.offspring_error(t, f, child, spine) == want
