"""HVL-Prime mutation with leaf-only or subtree deletion.

The three structural edits (:func:`apply_insert`, :func:`apply_delete`,
:func:`apply_substitute`) are deterministic. :func:`hvl_prime` draws the
random choices, always in the order operation, literal, function, node,
child order, so that a seeded generator fully determines a trajectory.
:func:`enumerate_outcomes` gives the exact offspring distribution with
rational probabilities.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple

from .errors import InvalidNodeRef
from .tree import (
    EMPTY,
    LEFT,
    RIGHT,
    Leaf,
    Literal,
    Node,
    NodeRef,
    Op,
    SyntaxTree,
    leaf_path,
    node_path,
    replace_at,
    subtree_at,
)

__all__ = [
    "Operation",
    "DeletionMode",
    "MutationConfig",
    "Move",
    "OutcomeDistribution",
    "literal_set",
    "apply_insert",
    "apply_delete",
    "apply_substitute",
    "apply_move",
    "hvl_prime",
    "hvl_prime_traced",
    "enumerate_moves",
    "enumerate_outcomes",
]


class Operation(enum.Enum):
    INS = "ins"
    DEL = "del"
    SUB = "sub"


_OPERATIONS = (Operation.INS, Operation.DEL, Operation.SUB)


class DeletionMode(enum.Enum):
    LEAF_ONLY = "leaf"
    SUBTREE = "subtree"


def literal_set(n: int, negations: bool = False) -> tuple[Literal, ...]:
    """``x1..xn``, followed by ``!x1..!xn`` when ``negations`` is set."""
    lits = [Literal(i) for i in range(1, n + 1)]
    if negations:
        lits += [Literal(i, True) for i in range(1, n + 1)]
    return tuple(lits)


@dataclass(frozen=True)
class MutationConfig:
    literals: tuple[Literal, ...]
    functions: tuple[Op, ...] = (Op.AND, Op.OR)
    deletion: DeletionMode = DeletionMode.SUBTREE
    _leaves: tuple[Leaf, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple(self.literals))
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.literals:
            raise ValueError("literal set must be non-empty")
        if len(set(self.literals)) != len(self.literals):
            raise ValueError("literal set contains duplicates")
        if not self.functions or len(set(self.functions)) != len(self.functions):
            raise ValueError("function set must be non-empty and duplicate-free")
        # leaves are immutable, so one shared instance per literal suffices
        object.__setattr__(self, "_leaves", tuple(Leaf(l) for l in self.literals))

    @classmethod
    def standard(cls, n: int, negations: bool = False, deletion: DeletionMode = DeletionMode.SUBTREE) -> MutationConfig:
        return cls(literal_set(n, negations), (Op.AND, Op.OR), deletion)


class Move(NamedTuple):
    """One fully resolved HVL-Prime choice. Unused fields are ``None``."""

    operation: Operation
    literal: Literal | None = None
    function: Op | None = None
    at: NodeRef | None = None
    new_on_left: bool | None = None


# --- deterministic edits -------------------------------------------------------------


def apply_insert(tree: SyntaxTree, at: NodeRef, f: Op, l: Literal | Leaf, new_on_left: bool = False) -> SyntaxTree:
    """Replace the node at ``at`` by ``f`` with children (old subtree, ``l``).

    ``new_on_left`` puts the new leaf first.
    """
    old = subtree_at(tree, at)
    leaf = l if isinstance(l, Leaf) else Leaf(l)
    new = Node(f, leaf, old) if new_on_left else Node(f, old, leaf)
    return replace_at(tree, at, new)


def apply_delete(tree: SyntaxTree, at: NodeRef) -> SyntaxTree:
    """Remove the subtree at ``at`` and its parent; the sibling takes the parent's place.

    Deleting the root yields the empty tree.
    """
    subtree_at(tree, at)
    if not at:
        return EMPTY
    parent = at[:-1]
    sibling = subtree_at(tree, parent + (RIGHT if at[-1] == LEFT else LEFT,))
    return replace_at(tree, parent, sibling)


def apply_substitute(tree: SyntaxTree, at: NodeRef, l: Literal | Leaf) -> SyntaxTree:
    if type(subtree_at(tree, at)) is not Leaf:
        raise InvalidNodeRef(f"substitution target {at!r} is not a leaf")
    return replace_at(tree, at, l if isinstance(l, Leaf) else Leaf(l))


def apply_move(tree: SyntaxTree, move: Move) -> SyntaxTree:
    if tree is EMPTY:
        return Leaf(move.literal)
    if move.operation is Operation.INS:
        return apply_insert(tree, move.at, move.function, move.literal, move.new_on_left)
    if move.operation is Operation.DEL:
        return apply_delete(tree, move.at)
    return apply_substitute(tree, move.at, move.literal)


# --- randomised operator -----------------------------------------------------------------


def hvl_prime_traced(tree: SyntaxTree, cfg: MutationConfig, rng) -> tuple[SyntaxTree, Move]:
    """One HVL-Prime mutation; returns the offspring and the move that made it.

    ``rng`` is a :class:`~rlsgp.rng.RandomStream`.
    """
    randrange = rng.below
    op = _OPERATIONS[randrange(3)]
    li = randrange(len(cfg.literals))
    f = cfg.functions[randrange(len(cfg.functions))]
    leaf = cfg._leaves[li]
    if tree is EMPTY:
        return leaf, Move(op, leaf.literal)
    if op is Operation.INS:
        at = node_path(tree, randrange(tree.node_count))
        new_on_left = randrange(2) == 1
        child = subtree_at(tree, at)
        new = Node(f, leaf, child) if new_on_left else Node(f, child, leaf)
        return replace_at(tree, at, new), Move(op, leaf.literal, f, at, new_on_left)
    if op is Operation.DEL:
        if cfg.deletion is DeletionMode.SUBTREE:
            at = node_path(tree, randrange(tree.node_count))
        else:
            at = leaf_path(tree, randrange(tree.leaf_count))
        return apply_delete(tree, at), Move(op, at=at)
    at = leaf_path(tree, randrange(tree.leaf_count))
    return replace_at(tree, at, leaf), Move(op, leaf.literal, at=at)


def hvl_prime(tree: SyntaxTree, cfg: MutationConfig, rng) -> SyntaxTree:
    return hvl_prime_traced(tree, cfg, rng)[0]


# --- exact distribution ---------------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeDistribution:
    """Offspring trees with their exact probabilities, in first-seen order."""

    outcomes: tuple[tuple[SyntaxTree, Fraction], ...]

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)

    def total(self) -> Fraction:
        return sum((p for _, p in self.outcomes), Fraction(0))

    def probability(self, tree: SyntaxTree) -> Fraction:
        return sum((p for t, p in self.outcomes if t == tree), Fraction(0))

    def as_dict(self) -> dict[SyntaxTree, Fraction]:
        return dict(self.outcomes)


def enumerate_moves(tree: SyntaxTree, cfg: MutationConfig) -> Iterator[tuple[Move, Fraction]]:
    """Every resolved move with its probability.

    Choices that the selected operation ignores (the literal and function
    for a deletion, the function for a substitution) are summed out.
    """
    nl = len(cfg.literals)
    nf = len(cfg.functions)
    third = Fraction(1, 3)
    if tree is EMPTY:
        for lit in cfg.literals:
            yield Move(Operation.INS, lit), Fraction(1, nl)
        return
    nodes = tree.node_count
    leaves = tree.leaf_count
    paths = [node_path(tree, k) for k in range(nodes)]
    leaf_paths = [leaf_path(tree, k) for k in range(leaves)]

    p_ins = third / (nl * nf * nodes * 2)
    for lit in cfg.literals:
        for f in cfg.functions:
            for at in paths:
                for new_on_left in (False, True):
                    yield Move(Operation.INS, lit, f, at, new_on_left), p_ins

    if cfg.deletion is DeletionMode.SUBTREE:
        for at in paths:
            yield Move(Operation.DEL, at=at), third / nodes
    else:
        for at in leaf_paths:
            yield Move(Operation.DEL, at=at), third / leaves

    p_sub = third / (nl * leaves)
    for lit in cfg.literals:
        for at in leaf_paths:
            yield Move(Operation.SUB, lit, at=at), p_sub


def enumerate_outcomes(tree: SyntaxTree, cfg: MutationConfig) -> OutcomeDistribution:
    acc: dict[SyntaxTree, Fraction] = {}
    for move, p in enumerate_moves(tree, cfg):
        child = apply_move(tree, move)
        acc[child] = acc.get(child, Fraction(0)) + p
    return OutcomeDistribution(tuple(acc.items()))
