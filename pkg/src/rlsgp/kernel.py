"""Compiled complete-table loop.

Trees are preorder code arrays: a code ``c >= 0`` is a leaf holding the
``c``-th configured literal, ``OP_AND`` and ``OP_OR`` are function nodes.
Truth tables are ``uint64`` word arrays over all ``2**n`` rows. The loop
consumes raw words of the run's PCG64 stream in exactly the order the
reference stepper does, so for a given seed it returns the same run. Words
arrive in blocks; when a block runs out mid-iteration the loop returns
``NEED_WORDS`` with the state as it was before that iteration, and the
caller resumes it with a refilled block.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.extending import intrinsic

from .fitness import Target, _position_columns
from .tree import EMPTY, Leaf, Node, Op, SyntaxTree

OP_AND = -1
OP_OR = -2
MAX_KERNEL_VARS = 20

OUTCOME_OPTIMUM = 0
OUTCOME_CAP = 1
NEED_WORDS = 2


@intrinsic
def _popcount(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


@njit(cache=True)
def _bit_length(k):
    b = 0
    while k:
        k >>= 1
        b += 1
    return b


@njit(cache=True)
def _draw(k, words, pos):
    """Uniform integer below ``k`` and the new read position; ``-1`` once the block is exhausted."""
    shift = np.uint64(64 - _bit_length(k))
    while pos < words.shape[0]:
        r = words[pos] >> shift
        pos += 1
        if r < np.uint64(k):
            return np.int64(r), pos
    return np.int64(-1), pos


@njit(cache=True)
def _subtree_end(code, k):
    need = 1
    j = k
    while need:
        if code[j] < 0:
            need += 1
        else:
            need -= 1
        j += 1
    return j


@njit(cache=True)
def _leaf_position(code, k):
    seen = 0
    i = 0
    while True:
        if code[i] >= 0:
            if seen == k:
                return i
            seen += 1
        i += 1


@njit(cache=True)
def _error(code, m, cols, target, buf, stk):
    """Error of the tree, evaluated right to left with a stack of operands.

    A stack entry ``>= 0`` is a literal column, ``-(r + 1)`` is buffer row ``r``.
    Returns the possibly enlarged buffer alongside the error.
    """
    words = cols.shape[1]
    sp = 0
    for i in range(m - 1, -1, -1):
        c = code[i]
        if c >= 0:
            stk[sp] = c
            sp += 1
            continue
        a = stk[sp - 1]
        b = stk[sp - 2]
        sp -= 2
        if sp >= buf.shape[0]:
            bigger = np.empty((2 * buf.shape[0], words), dtype=np.uint64)
            bigger[: buf.shape[0]] = buf
            buf = bigger
        x = cols[a] if a >= 0 else buf[-a - 1]
        y = cols[b] if b >= 0 else buf[-b - 1]
        out = buf[sp]
        if c == OP_AND:
            for w in range(words):
                out[w] = x[w] & y[w]
        else:
            for w in range(words):
                out[w] = x[w] | y[w]
        stk[sp] = -(sp + 1)
        sp += 1
    top = stk[0]
    v = cols[top] if top >= 0 else buf[-top - 1]
    err = np.uint64(0)
    for w in range(words):
        err += _popcount(v[w] ^ target[w])
    return np.int64(err), buf


@njit(cache=True)
def _grow(a, need):
    if need <= a.shape[0]:
        return a
    b = np.empty(max(need, 2 * a.shape[0]), dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def run_complete_table(
    code, m, fit, iterations, accepted, ors, cols, target, funcs, subtree_deletion, ell, max_iterations, empty_fitness, words, pos
):
    """Iterate until the optimum, the cap, or the end of ``words``.

    ``fit < 0`` asks for the fitness of ``code`` to be computed first;
    ``ell < 0`` means no leaf limit. Returns
    ``(status, code, m, fit, iterations, accepted, ors_accepted, pos)``.
    """
    n_lits = cols.shape[0]
    n_funcs = funcs.shape[0]
    n_words = cols.shape[1]
    cap = max(2 * m + 8, 64)
    code = _grow(code, cap)
    off = np.empty(code.shape[0], dtype=np.int64)
    stk = np.empty(code.shape[0], dtype=np.int64)
    buf = np.empty((16, n_words), dtype=np.uint64)
    if fit < 0:
        if m == 0:
            fit = empty_fitness
        else:
            fit, buf = _error(code, m, cols, target, buf, stk)
    while True:
        if m > 0 and fit == 0:
            return OUTCOME_OPTIMUM, code, m, fit, iterations, accepted, ors, pos
        if iterations >= max_iterations:
            return OUTCOME_CAP, code, m, fit, iterations, accepted, ors, pos
        if m + 2 > off.shape[0]:
            off = _grow(off, m + 2)
            stk = _grow(stk, m + 2)
            code = _grow(code, m + 2)
        start = pos
        op, pos = _draw(3, words, pos)
        lit, pos = _draw(n_lits, words, pos)
        fi, pos = _draw(n_funcs, words, pos)
        if fi < 0:
            return NEED_WORDS, code, m, fit, iterations, accepted, ors, start
        fn = funcs[fi]
        is_or_insert = False
        if m == 0:
            off[0] = lit
            m2 = 1
        elif op == 0:
            k, pos = _draw(m, words, pos)
            side, pos = _draw(2, words, pos)
            if side < 0:
                return NEED_WORDS, code, m, fit, iterations, accepted, ors, start
            e = _subtree_end(code, k)
            off[:k] = code[:k]
            off[k] = fn
            if side == 1:
                off[k + 1] = lit
                off[k + 2 : e + 2] = code[k:e]
            else:
                off[k + 1 : e + 1] = code[k:e]
                off[e + 1] = lit
            off[e + 2 : m + 2] = code[e:m]
            m2 = m + 2
            is_or_insert = fn == OP_OR
        elif op == 1:
            if subtree_deletion:
                k, pos = _draw(m, words, pos)
            else:
                j, pos = _draw((m + 1) // 2, words, pos)
                k = -1 if j < 0 else _leaf_position(code, j)
            if k < 0:
                return NEED_WORDS, code, m, fit, iterations, accepted, ors, start
            if k == 0:
                m2 = 0
            else:
                # internal nodes still waiting for their right child form a stack
                parent = -1
                is_left = False
                sp = 0
                for i in range(k + 1):
                    if i > 0:
                        parent = stk[sp - 1]
                        is_left = parent + 1 == i
                        if not is_left:
                            sp -= 1
                        if i == k:
                            break
                    if code[i] < 0:
                        stk[sp] = i
                        sp += 1
                p_end = _subtree_end(code, parent)
                if is_left:
                    s0 = _subtree_end(code, k)
                    s1 = p_end
                else:
                    s0 = parent + 1
                    s1 = k
                off[:parent] = code[:parent]
                width = s1 - s0
                off[parent : parent + width] = code[s0:s1]
                tail = m - p_end
                off[parent + width : parent + width + tail] = code[p_end:m]
                m2 = parent + width + tail
        else:
            j, pos = _draw((m + 1) // 2, words, pos)
            if j < 0:
                return NEED_WORDS, code, m, fit, iterations, accepted, ors, start
            k = _leaf_position(code, j)
            off[:m] = code[:m]
            off[k] = lit
            m2 = m
        iterations += 1
        if ell < 0 or (m2 + 1) // 2 <= ell:
            if m2 == 0:
                f2 = empty_fitness
            else:
                f2, buf = _error(off, m2, cols, target, buf, stk)
            if f2 <= fit:
                code, off = off, code
                m = m2
                fit = f2
                accepted += 1
                if is_or_insert:
                    ors += 1


# --- conversion between trees and code arrays --------------------------------


def literal_columns(literals, n: int) -> np.ndarray:
    """One word row per configured literal over the ``2**n`` rows."""
    pos_cols, full = _position_columns(n)
    words = max(1, (1 << n) // 64)
    out = np.zeros((len(literals), words), dtype=np.uint64)
    for r, lit in enumerate(literals):
        c = pos_cols[lit.index - 1]
        if lit.negated:
            c ^= full
        out[r, :] = np.frombuffer(c.to_bytes(words * 8, "little"), dtype="<u8")
    return out


def target_words(target: Target, n: int) -> np.ndarray:
    full = (1 << (1 << n)) - 1
    value = 1 << ((1 << n) - 1) if target is Target.AND else full ^ 1
    words = max(1, (1 << n) // 64)
    return np.frombuffer(value.to_bytes(words * 8, "little"), dtype="<u8").copy()


def encode(tree: SyntaxTree, literals) -> np.ndarray:
    index = {lit: i for i, lit in enumerate(literals)}
    out = []
    stack = [] if tree is EMPTY else [tree]
    while stack:
        t = stack.pop()
        if type(t) is Leaf:
            out.append(index[t.literal])
        else:
            out.append(OP_AND if t.op is Op.AND else OP_OR)
            stack.append(t.right)
            stack.append(t.left)
    return np.array(out, dtype=np.int64)


def decode(code: np.ndarray, m: int, literals) -> SyntaxTree:
    if m == 0:
        return EMPTY
    leaves = [Leaf(lit) for lit in literals]
    stack: list = []
    for i in range(m - 1, -1, -1):
        c = int(code[i])
        if c >= 0:
            stack.append(leaves[c])
        else:
            left = stack.pop()
            right = stack.pop()
            stack.append(Node(Op.AND if c == OP_AND else Op.OR, left, right))
    return stack[0]
