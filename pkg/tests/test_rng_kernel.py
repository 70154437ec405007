import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_error, trees
from rlsgp import kernel
from rlsgp.fitness import Target
from rlsgp.mutation import literal_set
from rlsgp.rng import RandomStream


class TestRandomStream:
    def test_below_is_uniform(self):
        rng, k, draws = RandomStream(0), 6, 60_000
        counts = np.bincount([rng.below(k) for _ in range(draws)], minlength=k)
        sd = math.sqrt(draws * (1 / k) * (1 - 1 / k))
        assert counts.size == k and np.all(np.abs(counts - draws / k) <= 4 * sd)

    def test_below_one(self):
        assert {RandomStream(3).below(1) for _ in range(10)} == {0}

    @given(st.integers(1, 300), st.integers(1, 5), st.integers(0, 2**32))
    def test_bits_range(self, s, count, seed):
        out = RandomStream(seed).bits(s, count)
        assert len(out) == count and all(0 <= v < 2**s for v in out)

    def test_words_continue_the_same_stream(self):
        a = RandomStream(9).words(6)
        b = RandomStream(9)
        assert a.tolist() == b.words(3).tolist() + b.words(3).tolist()

    def test_below_reads_top_bits_with_rejection(self):
        for k in (2, 3, 5, 12):
            raw = iter(int(w) >> (64 - k.bit_length()) for w in RandomStream(k).words(64))
            want = next(r for r in raw if r < k)
            assert RandomStream(k).below(k) == want


class TestKernelHelpers:
    @given(trees(n=6))
    def test_encode_decode_roundtrip(self, t):
        lits = literal_set(6, True)
        code = kernel.encode(t, lits)
        assert kernel.decode(code, len(code), lits) == t

    @given(trees(n=7, max_leaves=12), st.sampled_from(Target))
    def test_compiled_error_matches_brute_force(self, t, target):
        lits = literal_set(7, True)
        code = kernel.encode(t, lits)
        cols = kernel.literal_columns(lits, 7)
        tgt = kernel.target_words(target, 7)
        err, _ = kernel._error(code, len(code), cols, tgt, np.zeros((4, cols.shape[1]), np.uint64), np.zeros(64, np.int64))
        assert err == brute_error(t, 7, target.value)
