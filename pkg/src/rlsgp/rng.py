"""Per-run random stream.

Every draw a run makes comes from one numpy ``PCG64`` bit generator. The
reference stepper reads it through :meth:`RandomStream.below` and
:meth:`RandomStream.bits`; the compiled loop is fed blocks of the same raw
words through :meth:`RandomStream.words`, so both produce identical
trajectories for a given seed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RandomStream"]


class RandomStream:
    def __init__(self, seed: int):
        self.bit_generator = np.random.PCG64(seed)
        self._raw = self.bit_generator.random_raw

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``: top ``k.bit_length()`` bits of a word, with rejection."""
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        shift = 64 - k.bit_length()
        raw = self._raw
        r = raw() >> shift
        while r >= k:
            r = raw() >> shift
        return r

    def words(self, count: int) -> np.ndarray:
        """The next ``count`` raw 64-bit outputs."""
        return self._raw(count).astype(np.uint64)

    def bits(self, s: int, count: int = 1) -> list[int]:
        """``count`` independent uniform ``s``-bit integers."""
        words = (s + 63) // 64
        data = self._raw(words * count).astype("<u8").tobytes()
        mask = (1 << s) - 1
        step = words * 8
        return [int.from_bytes(data[i * step : (i + 1) * step], "little") & mask for i in range(count)]
