"""Program trees over {AND, OR} with (possibly negated) variable leaves.

Trees are immutable. Subtrees are shared freely between a parent and its
mutated offspring, which is what keeps the evolutionary loop cheap. A tree
node may carry a private memo slot used by the fitness module; it never
affects equality, hashing or text output.

Nodes are addressed either by a *path* (a tuple of ``LEFT``/``RIGHT``
steps from the root) or by a preorder index, the form in which the
mutation operator draws them.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import ArityError, EmptyTreeError, InvalidNodeRef, LiteralIndexError, TreeSyntaxError

__all__ = [
    "Op",
    "Literal",
    "SyntaxTree",
    "Empty",
    "Leaf",
    "Node",
    "EMPTY",
    "LEFT",
    "RIGHT",
    "NodeRef",
    "TreeStats",
    "parse",
    "to_text",
    "evaluate",
    "tree_stats",
    "variables",
    "iter_nodes",
    "node_path",
    "leaf_path",
    "subtree_at",
    "replace_at",
    "dual",
    "random_tree",
]

LEFT = 0
RIGHT = 1

NodeRef = tuple  # tuple[int, ...] of LEFT/RIGHT steps


class Op(enum.Enum):
    AND = "and"
    OR = "or"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Literal:
    """Variable ``x_index`` (1-based), optionally negated."""

    index: int
    negated: bool = False

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"variable index must be >= 1, got {self.index}")

    def __str__(self) -> str:
        return ("!x" if self.negated else "x") + str(self.index)

    def flipped(self) -> Literal:
        return Literal(self.index, not self.negated)


class SyntaxTree:
    """Common base of :class:`Empty`, :class:`Leaf` and :class:`Node`."""

    __slots__ = ()
    leaf_count: int

    @property
    def node_count(self) -> int:
        return 2 * self.leaf_count - 1 if self.leaf_count else 0

    def __str__(self) -> str:
        return to_text(self)


class Empty(SyntaxTree):
    __slots__ = ()
    leaf_count = 0
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY"

    def __reduce__(self):
        return (Empty, ())


EMPTY = Empty()


class Leaf(SyntaxTree):
    __slots__ = ("literal", "index", "negated", "_memo")
    leaf_count = 1

    def __init__(self, literal: Literal):
        self.literal = literal
        self.index = literal.index
        self.negated = literal.negated
        self._memo = None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, SyntaxTree):
            return NotImplemented
        return type(other) is Leaf and self.literal == other.literal

    def __hash__(self) -> int:
        return hash(self.literal)

    def __repr__(self) -> str:
        return f"Leaf({self.literal})"

    def __reduce__(self):
        return (Leaf, (self.literal,))


class Node(SyntaxTree):
    __slots__ = ("op", "left", "right", "leaf_count", "_hash", "_memo")

    def __init__(self, op: Op, left: SyntaxTree, right: SyntaxTree):
        if left is EMPTY or right is EMPTY:
            raise ValueError("the empty tree cannot appear as a child")
        self.op = op
        self.left = left
        self.right = right
        self.leaf_count = left.leaf_count + right.leaf_count
        self._hash = None
        self._memo = None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, SyntaxTree):
            return NotImplemented
        return (
            type(other) is Node
            and self.op is other.op
            and self.leaf_count == other.leaf_count
            and self.left == other.left
            and self.right == other.right
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.op, hash(self.left), hash(self.right)))
        return self._hash

    def __repr__(self) -> str:
        return f"Node({to_text(self)})"

    def __reduce__(self):
        return (Node, (self.op, self.left, self.right))


# --- text form --------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(!?)x(\d+)|(and|or)\b|(\S))")


def parse(text: str, n: int | None = None) -> SyntaxTree:
    """Parse fully parenthesised prefix text, e.g. ``"(or (and x1 x2) !x3)"``.

    ``"()"`` denotes the empty tree and is only valid as the whole input.
    When ``n`` is given, variable indices above ``n`` are rejected.
    """
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        start = m.end() - len(m.group(0).lstrip())
        if m.group(1):
            tokens.append(("(", None, start))
        elif m.group(2):
            tokens.append((")", None, start))
        elif m.group(4) is not None:
            tokens.append(("lit", (m.group(3) == "!", m.group(4)), start))
        elif m.group(5):
            tokens.append(("op", Op(m.group(5)), start))
        else:
            raise TreeSyntaxError(f"unexpected character {m.group(6)!r}", start)
        pos = m.end()
    if text[pos:].strip():
        raise TreeSyntaxError("unexpected trailing input", pos)
    if not tokens:
        raise TreeSyntaxError("empty input", 0)

    if len(tokens) == 2 and tokens[0][0] == "(" and tokens[1][0] == ")":
        return EMPTY

    i = 0

    def expect_tree() -> SyntaxTree:
        nonlocal i
        if i >= len(tokens):
            raise TreeSyntaxError("unexpected end of input", len(text))
        kind, val, at = tokens[i]
        if kind == "lit":
            i += 1
            negated, digits = val
            index = int(digits)
            if index < 1 or (n is not None and index > n):
                raise LiteralIndexError(f"variable index x{index} out of range", at)
            return Leaf(Literal(index, negated))
        if kind != "(":
            raise TreeSyntaxError(f"expected a tree, found {kind!r}", at)
        i += 1
        if i < len(tokens) and tokens[i][0] == ")":
            raise TreeSyntaxError("the empty tree cannot appear as a child", at)
        if i >= len(tokens) or tokens[i][0] != "op":
            where = tokens[i][2] if i < len(tokens) else len(text)
            raise TreeSyntaxError("expected 'and' or 'or'", where)
        op = tokens[i][1]
        i += 1
        children = []
        while i < len(tokens) and tokens[i][0] != ")":
            children.append(expect_tree())
        if i >= len(tokens):
            raise TreeSyntaxError("missing ')'", len(text))
        if len(children) != 2:
            raise ArityError(f"'{op}' takes exactly 2 arguments, got {len(children)}", at)
        i += 1
        return Node(op, children[0], children[1])

    tree = expect_tree()
    if i != len(tokens):
        raise TreeSyntaxError("unexpected trailing input", tokens[i][2])
    return tree


def to_text(tree: SyntaxTree) -> str:
    if tree is EMPTY:
        return "()"
    parts: list[str] = []
    stack: list = [tree]
    while stack:
        t = stack.pop()
        if isinstance(t, str):
            parts.append(t)
        elif type(t) is Leaf:
            parts.append(str(t.literal))
        else:
            parts.append(f"({t.op.value} ")
            stack.extend((")", t.right, " ", t.left))
    return "".join(parts)


# --- semantics and statistics ------------------------------------------------


def evaluate(tree: SyntaxTree, assignment: Sequence) -> bool:
    """Evaluate on one assignment; ``assignment[i - 1]`` is the value of ``x_i``."""
    if tree is EMPTY:
        raise EmptyTreeError("cannot evaluate the empty tree")

    def ev(t) -> bool:
        if type(t) is Leaf:
            return bool(assignment[t.index - 1]) != t.negated
        if t.op is Op.AND:
            return ev(t.left) and ev(t.right)
        return ev(t.left) or ev(t.right)

    return ev(tree)


@dataclass(frozen=True)
class TreeStats:
    leaf_count: int
    node_count: int
    distinct_indices: frozenset = field(default_factory=frozenset)
    or_count: int = 0
    and_count: int = 0
    contains_contradiction_or_tautology: bool = False


def _walk(tree: SyntaxTree) -> Iterator[SyntaxTree]:
    if tree is EMPTY:
        return
    stack = [tree]
    while stack:
        t = stack.pop()
        yield t
        if type(t) is Node:
            stack.append(t.right)
            stack.append(t.left)


def tree_stats(tree: SyntaxTree) -> TreeStats:
    ors = ands = 0
    pos: set[int] = set()
    neg: set[int] = set()
    for t in _walk(tree):
        if type(t) is Leaf:
            (neg if t.negated else pos).add(t.index)
        elif t.op is Op.OR:
            ors += 1
        else:
            ands += 1
    return TreeStats(
        leaf_count=tree.leaf_count,
        node_count=tree.node_count,
        distinct_indices=frozenset(pos | neg),
        or_count=ors,
        and_count=ands,
        contains_contradiction_or_tautology=bool(pos & neg),
    )


def variables(tree: SyntaxTree) -> set[int]:
    return {t.index for t in _walk(tree) if type(t) is Leaf}


# --- addressing -----------------------------------------------------------------


def iter_nodes(tree: SyntaxTree) -> Iterator[tuple[NodeRef, SyntaxTree]]:
    """Yield ``(path, subtree)`` for every node in preorder."""
    if tree is EMPTY:
        return
    stack: list[tuple[NodeRef, SyntaxTree]] = [((), tree)]
    while stack:
        path, t = stack.pop()
        yield path, t
        if type(t) is Node:
            stack.append((path + (RIGHT,), t.right))
            stack.append((path + (LEFT,), t.left))


def node_path(tree: SyntaxTree, k: int) -> NodeRef:
    """Path of the ``k``-th node (0-based) in preorder."""
    if not 0 <= k < tree.node_count:
        raise InvalidNodeRef(f"node index {k} out of range for {tree.node_count} nodes")
    path = []
    t = tree
    while k:
        k -= 1
        left_nodes = 2 * t.left.leaf_count - 1
        if k < left_nodes:
            path.append(LEFT)
            t = t.left
        else:
            k -= left_nodes
            path.append(RIGHT)
            t = t.right
    return tuple(path)


def leaf_path(tree: SyntaxTree, k: int) -> NodeRef:
    """Path of the ``k``-th leaf (0-based) from the left."""
    if not 0 <= k < tree.leaf_count:
        raise InvalidNodeRef(f"leaf index {k} out of range for {tree.leaf_count} leaves")
    path = []
    t = tree
    while type(t) is Node:
        if k < t.left.leaf_count:
            path.append(LEFT)
            t = t.left
        else:
            k -= t.left.leaf_count
            path.append(RIGHT)
            t = t.right
    return tuple(path)


def subtree_at(tree: SyntaxTree, path: NodeRef) -> SyntaxTree:
    if tree is EMPTY:
        raise InvalidNodeRef("the empty tree has no nodes")
    t = tree
    for depth, step in enumerate(path):
        if type(t) is not Node or step not in (LEFT, RIGHT):
            raise InvalidNodeRef(f"path {path!r} leaves the tree at depth {depth}")
        t = t.left if step == LEFT else t.right
    return t


def replace_at(tree: SyntaxTree, path: NodeRef, new: SyntaxTree) -> SyntaxTree:
    """Return a copy of ``tree`` whose subtree at ``path`` is ``new``."""
    spine = []
    t = tree
    for step in path:
        if type(t) is not Node:
            raise InvalidNodeRef(f"path {path!r} does not address a node")
        spine.append(t)
        t = t.left if step == LEFT else t.right
    if t is EMPTY:
        raise InvalidNodeRef("the empty tree has no nodes")
    for parent, step in zip(reversed(spine), reversed(path)):
        if step == LEFT:
            new = Node(parent.op, new, parent.right)
        else:
            new = Node(parent.op, parent.left, new)
    return new


# --- helpers ------------------------------------------------------------------


def dual(tree: SyntaxTree) -> SyntaxTree:
    """Swap AND/OR and flip every literal (De Morgan dual)."""
    if tree is EMPTY:
        return EMPTY
    if type(tree) is Leaf:
        return Leaf(tree.literal.flipped())
    op = Op.OR if tree.op is Op.AND else Op.AND
    return Node(op, dual(tree.left), dual(tree.right))


def random_tree(rng, leaves: int, literals: Sequence[Literal], functions: Sequence[Op] = (Op.AND, Op.OR)) -> SyntaxTree:
    """Grow a random tree with exactly ``leaves`` leaves by repeated insertion.

    ``rng`` is a :class:`random.Random`. Each step replaces a uniformly chosen
    node by a fresh function node whose children are that node and a random
    literal, in random order.
    """
    if leaves < 1:
        return EMPTY
    t: SyntaxTree = Leaf(rng.choice(literals))
    for _ in range(leaves - 1):
        path = node_path(t, rng.randrange(t.node_count))
        old = subtree_at(t, path)
        leaf = Leaf(rng.choice(literals))
        op = rng.choice(functions)
        new = Node(op, leaf, old) if rng.random() < 0.5 else Node(op, old, leaf)
        t = replace_at(t, path, new)
    return t
