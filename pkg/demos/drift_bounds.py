"""Compare the super-multiplicative and multiplicative hitting-time bounds,
then check one synthetic process by simulation.

Run with ``python demos/drift_bounds.py``.
"""

from fractions import Fraction

from rlsgp import DriftParams, DriftProcessSpec, ProcessKind, multiplicative_drift_bound, simulate_hitting_time, smdrift_bound
from rlsgp.drift import expected_hitting_time

delta = Fraction(1, 100)
print("x0\tsuper-mult\tmult")
for k in (1, 4, 16, 64, 256):
    x0 = 2**k
    print(f"2^{k}\t{smdrift_bound(DriftParams(2, delta, x0)):.1f}\t\t{multiplicative_drift_bound(delta, x0):.1f}")

spec = DriftProcessSpec(ProcessKind.HALVING, DriftParams(2, Fraction(1, 10), 16))
stats = simulate_hitting_time(spec, 10_000, 0)
print(f"\nhalving from 16: simulated {stats.mean:.3f} +- {stats.stderr:.3f}, "
      f"exact {expected_hitting_time(spec):.4f}, bound {smdrift_bound(spec.params):.1f}")
