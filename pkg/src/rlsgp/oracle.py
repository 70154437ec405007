"""Exact checks on small instances: local-optimum traps, one-step drift and
binomial concentration. All arithmetic is exact; nothing here has a
tolerance constant.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import RunConfig
from .errors import EmptyTreeError
from .fitness import ProblemSpec, Target, exact_error, semantically_equal
from .mutation import OutcomeDistribution, enumerate_outcomes
from .tree import EMPTY, Leaf, Op, SyntaxTree

__all__ = [
    "TrapReport",
    "DriftReport",
    "ConcentrationSpec",
    "ConcentrationReport",
    "is_trap",
    "one_step_drift",
    "concentration_check",
    "binomial_upper_tail",
    "binomial_lower_tail",
    "brute_force_error",
]


def _fitness(tree: SyntaxTree, spec: ProblemSpec) -> int:
    return (1 << spec.n) if tree is EMPTY else exact_error(tree, spec)


def _accepted(tree: SyntaxTree, cfg: RunConfig) -> tuple[int, list[tuple[SyntaxTree, Fraction, int]]]:
    spec = cfg.problem
    if tree is EMPTY:
        raise EmptyTreeError("the oracle needs a non-empty tree")
    f = _fitness(tree, spec)
    ell = spec.size_limit
    kept = []
    for child, p in enumerate_outcomes(tree, cfg.mutation):
        if ell is not None and child.leaf_count > ell:
            continue
        fc = _fitness(child, spec)
        if fc <= f:
            kept.append((child, p, fc))
    return f, kept


@dataclass(frozen=True)
class TrapReport:
    is_trap: bool
    fitness: int
    accepted_outcomes: OutcomeDistribution
    all_accepted_semantically_identical: bool
    all_accepted_same_size: bool


def is_trap(tree: SyntaxTree, cfg: RunConfig) -> TrapReport:
    """Whether every accepted one-step offspring is the same function at the same size.

    Such a tree can never leave its semantic point, so a non-optimal one
    is a permanent local optimum.
    """
    f, kept = _accepted(tree, cfg)
    same_sem = all(child is not EMPTY and semantically_equal(child, tree) for child, _, _ in kept)
    same_size = all(child.leaf_count == tree.leaf_count for child, _, _ in kept)
    return TrapReport(
        is_trap=f > 0 and same_sem and same_size,
        fitness=f,
        accepted_outcomes=OutcomeDistribution(tuple((c, p) for c, p, _ in kept)),
        all_accepted_semantically_identical=same_sem,
        all_accepted_same_size=same_size,
    )


@dataclass(frozen=True)
class DriftReport:
    fitness: int
    exact_drift: Fraction
    lower_bound: Fraction | None  # x / (12 ell n); None without a leaf limit


def one_step_drift(tree: SyntaxTree, cfg: RunConfig) -> DriftReport:
    """Expected one-iteration fitness decrease; rejected offspring contribute zero."""
    f, kept = _accepted(tree, cfg)
    drift = sum((p * (f - fc) for _, p, fc in kept), Fraction(0))
    ell = cfg.problem.size_limit
    bound = None if ell is None else Fraction(f, 12 * ell * cfg.problem.n)
    return DriftReport(f, drift, bound)


# --- binomial concentration --------------------------------------------------------


def _pmf_terms(s: int, g: Fraction, ks: range):
    """Yield ``C(s, k) p**k (q - p)**(s - k)`` for ``k`` in ``ks`` (probabilities times ``q**s``)."""
    p, q = g.numerator, g.denominator
    r = q - p
    k0 = ks.start
    term = math.comb(s, k0) * p**k0 * r ** (s - k0)
    for k in ks:
        yield term
        if k < s:
            # exact: the next term is an integer
            term = term * (s - k) * p // ((k + 1) * r) if r else 0


def _mass(s: int, g: Fraction, lo: int, hi: int) -> int:
    """``q**s * Pr[lo <= X <= hi]`` as an exact integer."""
    lo, hi = max(lo, 0), min(hi, s)
    if lo > hi:
        return 0
    return sum(_pmf_terms(s, g, range(lo, hi + 1)))


def binomial_upper_tail(s: int, g: Fraction, t: int) -> Fraction:
    """``Pr[X >= t]`` for ``X ~ Binomial(s, g)``."""
    g = Fraction(g)
    if t > s:
        return Fraction(0)
    if t <= 0 or g == 1:
        return Fraction(1)
    whole = g.denominator**s
    # sum whichever side of the threshold has fewer terms
    if s - t < t:
        num = _mass(s, g, t, s)
    else:
        num = whole - _mass(s, g, 0, t - 1)
    return Fraction(num, whole)


def binomial_lower_tail(s: int, g: Fraction, t: int) -> Fraction:
    """``Pr[X <= t]`` for ``X ~ Binomial(s, g)``."""
    if t < 0:
        return Fraction(0)
    return 1 - binomial_upper_tail(s, g, t + 1)


@dataclass(frozen=True)
class ConcentrationSpec:
    s: int
    G: Fraction
    n: int
    c: float

    def __post_init__(self):
        object.__setattr__(self, "G", Fraction(self.G))
        if not 0 <= self.G <= 1:
            raise ValueError("G must lie in [0, 1]")
        if self.s < 1 or self.n < 2 or self.c <= 0:
            raise ValueError("need s >= 1, n >= 2 and c > 0")


@dataclass(frozen=True)
class ConcentrationReport:
    spec: ConcentrationSpec
    mean: Fraction
    upper_threshold: int
    upper_tail: Fraction
    upper_bound: decimal.Decimal
    lower_threshold: int
    lower_tail: Fraction
    lower_bound: decimal.Decimal
    deviation_probability: Fraction  # Pr[|Gs - X| > max(c lg n, Gs)], reported only

    @property
    def upper_ok(self) -> bool:
        return _dec(self.upper_tail) <= self.upper_bound

    @property
    def lower_ok(self) -> bool:
        return _dec(self.lower_tail) <= self.lower_bound

    @property
    def passed(self) -> bool:
        return self.upper_ok and self.lower_ok


_CTX = decimal.Context(prec=60, Emin=-10**9, Emax=10**9)


def _dec(x: Fraction) -> decimal.Decimal:
    return _CTX.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator))


def _exp_neg(x: Fraction) -> decimal.Decimal:
    return _CTX.exp(-_dec(x))


def _lg_rational(n: int) -> Fraction:
    # exact when n is a power of two, which is the case on the checked grid
    if n & (n - 1) == 0:
        return Fraction(n.bit_length() - 1)
    return Fraction(math.log2(n))


def concentration_check(spec: ConcentrationSpec) -> ConcentrationReport:
    """Exact binomial tails of the sampled error against their Chernoff bounds.

    With ``X ~ Binomial(s, G)``, ``mu = sG`` and ``mu+ = max(mu, (c/2) lg n)``:
    ``Pr[X >= 2 mu+] <= exp(-mu+/3)`` and ``Pr[X <= mu/2] <= exp(-mu/8)``.
    """
    s, g = spec.s, spec.G
    mu = s * g
    lg = _lg_rational(spec.n)
    c = Fraction(spec.c)
    mu_plus = max(mu, c / 2 * lg)
    up_t = math.ceil(2 * mu_plus)
    low_t = math.floor(mu / 2)
    radius = max(c * lg, mu)
    # |mu - X| > radius  <=>  X > mu + radius  or  X < mu - radius
    above = binomial_upper_tail(s, g, math.floor(mu + radius) + 1)
    below = binomial_lower_tail(s, g, math.ceil(mu - radius) - 1)
    return ConcentrationReport(
        spec=spec,
        mean=mu,
        upper_threshold=up_t,
        upper_tail=binomial_upper_tail(s, g, up_t),
        upper_bound=_exp_neg(mu_plus / 3),
        lower_threshold=low_t,
        lower_tail=binomial_lower_tail(s, g, low_t),
        lower_bound=_exp_neg(mu / 8),
        deviation_probability=above + below,
    )


# --- brute force -------------------------------------------------------------------


def brute_force_error(tree: SyntaxTree, spec: ProblemSpec) -> int:
    """Error by evaluating every one of the ``2**n`` assignments (numpy, n <= 24)."""
    if tree is EMPTY:
        raise EmptyTreeError("the empty tree has no defined error")
    if spec.n > 24:
        raise ValueError("brute force is limited to n <= 24")
    rows = np.arange(1 << spec.n, dtype=np.uint32)
    x = [None] + [((rows >> (i - 1)) & 1).astype(bool) for i in range(1, spec.n + 1)]

    def ev(t):
        if type(t) is Leaf:
            if t.index > spec.n:
                raise ValueError(f"tree uses x{t.index} but n = {spec.n}")
            return ~x[t.index] if t.negated else x[t.index]
        a, b = ev(t.left), ev(t.right)
        return a & b if t.op is Op.AND else a | b

    target = np.logical_and.reduce(x[1:]) if spec.target is Target.AND else np.logical_or.reduce(x[1:])
    return int(np.count_nonzero(ev(tree) != target))
