import itertools

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from rlsgp import RQ, ExperimentConfig, run_experiment
from rlsgp.tree import Leaf, Literal, Node, Op

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")

ACCEPTANCE_SEED = 42


def literals(n, negations=True):
    neg = st.booleans() if negations else st.just(False)
    return st.builds(Literal, st.integers(1, n), neg)


def trees(n=4, negations=True, max_leaves=10):
    return st.recursive(
        literals(n, negations).map(Leaf),
        lambda kids: st.builds(Node, st.sampled_from(Op), kids, kids),
        max_leaves=max_leaves,
    )


def eval_naive(tree, bits):
    """Independent recursive evaluator, so tests do not lean on the library's own."""
    if isinstance(tree, Leaf):
        return bits[tree.index - 1] != tree.negated
    a = eval_naive(tree.left, bits)
    b = eval_naive(tree.right, bits)
    return (a and b) if tree.op is Op.AND else (a or b)


def brute_error(tree, n, target="and"):
    wrong = 0
    for bits in itertools.product((False, True), repeat=n):
        want = all(bits) if target == "and" else any(bits)
        wrong += eval_naive(tree, bits) != want
    return wrong


# --- session-wide experiment cache -------------------------------------------------

_cache = {}


@pytest.fixture(scope="session")
def experiment_results():
    """``experiment_results(rq)`` runs the default 500-run experiment once per session."""

    def get(rq):
        rq = RQ(rq)
        if rq not in _cache:
            cfg = ExperimentConfig.default(rq, master_seed=ACCEPTANCE_SEED)
            _cache[rq] = (cfg, run_experiment(cfg))
        return _cache[rq]

    return get


# --- acceptance summary ---------------------------------------------------------------

CHECKS = {}


def record(check, passed, detail=""):
    prev = CHECKS.get(check)
    ok = passed and (prev is None or prev[0])
    details = [d for d in ((prev[1] if prev else ""), detail) if d]
    CHECKS[check] = (ok, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not CHECKS:
        return
    terminalreporter.section("acceptance checks")
    for k in sorted(CHECKS):
        ok, detail = CHECKS[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {k}: {detail}")
