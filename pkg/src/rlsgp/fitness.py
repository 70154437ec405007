"""Error of a program against AND_n / OR_n.

Truth tables are Python ints used as bitsets: bit ``r`` of a column is the
value of one variable in row ``r``. Exact counts project the tree onto its
own variables, evaluate the ``2**k`` assignments of those ``k`` variables in
one bit-parallel pass, and weight each row by its ``2**(n - k)``
extensions. All counts are exact integers and all generalisation errors
are exact :class:`~fractions.Fraction` values on the exact path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from operator import and_, or_
from typing import Iterable, Iterator, Sequence

from .errors import EmptyTreeError, TooManyVariables
from .mutation import literal_set
from .rng import RandomStream
from .tree import EMPTY, LEFT, Leaf, Literal, Node, NodeRef, Op, SyntaxTree, dual, variables

__all__ = [
    "Target",
    "ProblemSpec",
    "Sample",
    "Estimate",
    "MAX_EXACT_VARS",
    "FALLBACK_ROWS",
    "exact_error",
    "closed_form_error",
    "draw_sample",
    "sampled_error",
    "generalisation_error",
    "semantically_equal",
    "truth_table",
    "TruthTableFitness",
]

MAX_EXACT_VARS = 30
FALLBACK_ROWS = 10**6
_CHUNK_VARS = 20  # rows per bit-parallel pass is 2**_CHUNK_VARS at most
_MEMO_MAX_N = 16


class Target(enum.Enum):
    AND = "and"
    OR = "or"


@dataclass(frozen=True)
class ProblemSpec:
    """Target function, number of variables, literal set and leaf limit.

    ``size_limit=None`` means unbounded.
    """

    target: Target = Target.AND
    n: int = 4
    negations: bool = False
    size_limit: int | None = None

    def __post_init__(self):
        if not 1 <= self.n <= 64:
            raise ValueError(f"n must be in [1, 64], got {self.n}")
        if self.size_limit is not None and self.size_limit < 1:
            raise ValueError("size_limit must be positive or None")

    def literals(self) -> tuple[Literal, ...]:
        return literal_set(self.n, self.negations)

    def target_value(self, assignment: Sequence) -> bool:
        if self.target is Target.AND:
            return all(assignment)
        return any(assignment)

    @property
    def ell_text(self) -> str:
        return "inf" if self.size_limit is None else str(self.size_limit)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate, returned when the exact path is unavailable."""

    value: float
    stderr: float
    rows: int
    exact: bool = False

    def __float__(self) -> float:
        return self.value


# --- bit-parallel evaluation -----------------------------------------------------------


@lru_cache(maxsize=8)
def _position_columns(k: int) -> tuple[tuple[int, ...], int]:
    """Columns of the ``k`` input positions over ``2**k`` rows, and the all-ones mask."""
    rows = 1 << k
    full = (1 << rows) - 1
    cols = []
    for j in range(k):
        run = 1 << j
        pattern = ((1 << run) - 1) << run
        cols.append(pattern * (full // ((1 << (2 * run)) - 1)))
    return tuple(cols), full


def _eval_bits(tree: SyntaxTree, cols, full: int) -> int:
    """Bitset of rows on which ``tree`` is true. ``cols[i]`` is the column of ``x_i``."""
    if type(tree) is Leaf:
        c = cols[tree.index]
        return full ^ c if tree.negated else c
    a = _eval_bits(tree.left, cols, full)
    b = _eval_bits(tree.right, cols, full)
    return a & b if tree.op is Op.AND else a | b


def _project(tree: SyntaxTree, order: Sequence[int]) -> tuple[int, bool, bool]:
    """(#true rows, value on all-true, value on all-false) over the variables in ``order``."""
    k = len(order)
    low = min(k, _CHUNK_VARS)
    pos_cols, full = _position_columns(low)
    cols: dict[int, int] = {v: pos_cols[j] for j, v in enumerate(order[:low])}
    high = order[low:]
    ones = 0
    first = last = 0
    chunks = 1 << len(high)
    for h in range(chunks):
        for j, v in enumerate(high):
            cols[v] = full if (h >> j) & 1 else 0
        t = _eval_bits(tree, cols, full)
        ones += t.bit_count()
        if h == 0:
            first = t
        if h == chunks - 1:
            last = t
    return ones, bool(last >> (full.bit_length() - 1)), bool(first & 1)


def _checked_vars(tree: SyntaxTree, spec: ProblemSpec, cap: int | None = MAX_EXACT_VARS) -> list[int]:
    if tree is EMPTY:
        raise EmptyTreeError("the empty tree has no defined error")
    vs = sorted(variables(tree))
    if vs[-1] > spec.n:
        raise ValueError(f"tree uses x{vs[-1]} but n = {spec.n}")
    if cap is not None and len(vs) > cap:
        raise TooManyVariables(f"{len(vs)} distinct variables exceed the exact cap of {cap}")
    return vs


def exact_error(tree: SyntaxTree, spec: ProblemSpec) -> int:
    """Number of the ``2**n`` assignments on which ``tree`` and the target disagree."""
    vs = _checked_vars(tree, spec)
    k = len(vs)
    ones, at_all_true, at_all_false = _project(tree, vs)
    scale = 1 << (spec.n - k)
    if spec.target is Target.AND:
        # wrong on every extension of a true row except the all-true input,
        # plus the all-true input itself when the tree says false there
        return ones * scale - at_all_true + (not at_all_true)
    zeros = (1 << k) - ones
    return zeros * scale - (not at_all_false) + at_all_false


def closed_form_error(a: int, n: int) -> int:
    """Error of a conjunction (disjunction) of ``a`` distinct variables on AND_n (OR_n)."""
    if not 0 <= a <= n:
        raise ValueError(f"need 0 <= a <= n, got a={a}, n={n}")
    return (1 << (n - a)) - 1


def truth_table(tree: SyntaxTree, n: int) -> int:
    """Full ``2**n``-row bitset; row ``r`` assigns bit ``j`` of ``r`` to ``x_{j+1}``."""
    if tree is EMPTY:
        raise EmptyTreeError("the empty tree has no truth table")
    pos_cols, full = _position_columns(n)
    return _eval_bits(tree, (0,) + pos_cols, full)


def semantically_equal(a: SyntaxTree, b: SyntaxTree) -> bool:
    """Equality as Boolean functions (projection onto the union of their variables)."""
    if a is EMPTY or b is EMPTY:
        return a is b
    order = sorted(variables(a) | variables(b))
    if len(order) > MAX_EXACT_VARS:
        raise TooManyVariables(f"{len(order)} distinct variables exceed the exact cap")
    if len(order) <= _CHUNK_VARS:
        pos_cols, full = _position_columns(len(order))
        cols = {v: pos_cols[j] for j, v in enumerate(order)}
        return _eval_bits(a, cols, full) == _eval_bits(b, cols, full)
    # dual() is the negation by De Morgan, so this is a XOR b
    xor = Node(Op.OR, Node(Op.AND, a, dual(b)), Node(Op.AND, dual(a), b))
    return _project(xor, order)[0] == 0


# --- sampled training sets ----------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    """``s`` assignments stored column-wise: bit ``r`` of ``columns[i]`` is ``x_{i+1}`` in row ``r``."""

    n: int
    s: int
    columns: tuple[int, ...]

    def __len__(self) -> int:
        return self.s

    def rows(self) -> Iterator[tuple[bool, ...]]:
        for r in range(self.s):
            yield tuple(bool((c >> r) & 1) for c in self.columns)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence]) -> Sample:
        rows = [tuple(bool(v) for v in row) for row in rows]
        if not rows:
            raise ValueError("a sample needs at least one row")
        n = len(rows[0])
        cols = [0] * n
        for r, row in enumerate(rows):
            if len(row) != n:
                raise ValueError("rows of unequal length")
            for i, v in enumerate(row):
                if v:
                    cols[i] |= 1 << r
        return cls(n, len(rows), tuple(cols))

    @classmethod
    def complete(cls, n: int) -> Sample:
        """The whole truth table as a sample of ``2**n`` rows."""
        pos_cols, _ = _position_columns(n)
        return cls(n, 1 << n, pos_cols)

    def target_column(self, target: Target) -> int:
        if target is Target.AND:
            return reduce(and_, self.columns)
        return reduce(or_, self.columns)


def draw_sample(n: int, s: int, rng: RandomStream) -> Sample:
    """``s`` independent uniform assignments (with replacement)."""
    if s < 1:
        raise ValueError(f"sample size must be >= 1, got {s}")
    return Sample(n, s, tuple(rng.bits(s, n)))


def _sample_cols(sample: Sample) -> tuple[int, ...]:
    return (0,) + sample.columns


def sampled_error(tree: SyntaxTree, spec: ProblemSpec, sample: Sample, target_column: int | None = None) -> int:
    """Rows of ``sample`` on which ``tree`` and the target disagree.

    ``target_column`` may be passed in when the caller already computed it.
    """
    if tree is EMPTY:
        raise EmptyTreeError("the empty tree has no sampled error")
    if sample.n != spec.n:
        raise ValueError(f"sample has n={sample.n}, problem has n={spec.n}")
    if target_column is None:
        target_column = sample.target_column(spec.target)
    full = (1 << sample.s) - 1
    return (_eval_bits(tree, _sample_cols(sample), full) ^ target_column).bit_count()


def generalisation_error(tree: SyntaxTree, spec: ProblemSpec, rng: RandomStream | None = None) -> Fraction | Estimate:
    """Probability of disagreement on a uniform input.

    Exact when the tree has at most ``MAX_EXACT_VARS`` distinct variables;
    otherwise a Monte Carlo :class:`Estimate` over ``FALLBACK_ROWS`` rows.
    """
    try:
        return Fraction(exact_error(tree, spec), 1 << spec.n)
    except TooManyVariables:
        pass
    rng = rng if rng is not None else RandomStream(0)
    sample = draw_sample(spec.n, FALLBACK_ROWS, rng)
    p = sampled_error(tree, spec, sample) / FALLBACK_ROWS
    return Estimate(p, math.sqrt(p * (1 - p) / FALLBACK_ROWS), FALLBACK_ROWS)


# --- engine-side exact fitness ---------------------------------------------------------------


class TruthTableFitness:
    """Exact error with per-node memoised truth tables.

    An offspring shares every subtree with its parent except the spine
    above the mutation point, so :meth:`offspring_error` re-evaluates only
    that spine, and stops as soon as a spine node turns out to compute the
    same function as the node it replaced. Used for ``n <= 16``; larger
    ``n`` falls back to :func:`exact_error`. The empty tree scores ``2**n``.
    """

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.empty_fitness = 1 << spec.n
        self._memo_ok = spec.n <= _MEMO_MAX_N
        if self._memo_ok:
            pos_cols, full = _position_columns(spec.n)
            self._cols = (0,) + pos_cols
            self._neg = (0,) + tuple(full ^ c for c in pos_cols)
            all_true_row = 1 << ((1 << spec.n) - 1)
            self._target = all_true_row if spec.target is Target.AND else full ^ 1
        self._token = object()

    def __call__(self, tree: SyntaxTree) -> int:
        if tree is EMPTY:
            return self.empty_fitness
        if not self._memo_ok:
            return exact_error(tree, self.spec)
        return (self._tt(tree) ^ self._target).bit_count()

    def offspring_error(self, parent: SyntaxTree, parent_error: int, offspring: SyntaxTree, spine: NodeRef) -> int:
        """Error of ``offspring``, which equals ``parent`` off the path ``spine``.

        ``spine`` addresses the deepest offspring node that is not shared
        with the parent.
        """
        if parent is EMPTY or offspring is EMPTY or not self._memo_ok:
            return self(offspring)
        token = self._token
        tt = self._tt
        p_nodes = [parent]
        o_nodes = [offspring]
        p = parent
        o = offspring
        for step in spine:
            if step == LEFT:
                p, o = p.left, o.left
            else:
                p, o = p.right, o.right
            p_nodes.append(p)
            o_nodes.append(o)
        v = tt(o_nodes[-1])
        level = len(spine)
        while True:
            if v == tt(p_nodes[level]):
                # same function here, hence at every ancestor as well
                for up in range(level, -1, -1):
                    o_nodes[up]._memo = (token, tt(p_nodes[up]))
                return parent_error
            o_nodes[level]._memo = (token, v)
            if level == 0:
                break
            level -= 1
            node = o_nodes[level]
            other = tt(node.right) if spine[level] == LEFT else tt(node.left)
            v = v & other if node.op is Op.AND else v | other
        return (v ^ self._target).bit_count()

    def _tt(self, t):
        memo = t._memo
        if memo is not None and memo[0] is self._token:
            return memo[1]
        if type(t) is Leaf:
            v = self._neg[t.index] if t.negated else self._cols[t.index]
        else:
            a = self._tt(t.left)
            b = self._tt(t.right)
            v = a & b if t.op is Op.AND else a | b
        t._memo = (self._token, v)
        return v
