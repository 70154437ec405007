"""End-to-end acceptance checks at full experiment size.

Each test records a PASS/FAIL line that is printed in the terminal summary,
so a failing check is reported with the numbers that decided it.
"""

import filecmp
import math
import random
from fractions import Fraction

import pytest

from conftest import record
from rlsgp.cli import main
from rlsgp.drift import DEFAULT_GRID, DriftParams, DriftProcessSpec, ProcessKind, check_condition, multiplicative_drift_bound, smdrift_bound, validate_grid
from rlsgp.engine import make_config
from rlsgp.errors import InvalidProcess
from rlsgp.experiments import CellKey
from rlsgp.fitness import ProblemSpec, Target, exact_error
from rlsgp.mutation import DeletionMode, literal_set
from rlsgp.oracle import ConcentrationSpec, brute_force_error, concentration_check, is_trap, one_step_drift
from rlsgp.tree import parse, random_tree

pytestmark = pytest.mark.slow

# reference RQ2 means: (T, S) per (n, ell label)
RQ2_REFERENCE = {
    (4, "n"): (51.2, 4.0), (4, "n+1"): (42.5, 4.4), (4, "2n"): (38.8, 5.1), (4, "inf"): (39.1, 5.3),
    (8, "n"): (147.5, 8.0), (8, "n+1"): (129.9, 8.7), (8, "2n"): (93.5, 11.3), (8, "inf"): (92.3, 11.6),
    (12, "n"): (325.9, 12.0), (12, "n+1"): (233.4, 12.8), (12, "2n"): (153.6, 17.7), (12, "inf"): (151.2, 18.3),
    (16, "n"): (544.6, 16.0), (16, "n+1"): (377.0, 16.9), (16, "2n"): (228.3, 24.5), (16, "inf"): (221.0, 25.2),
}


def by_label(stats):
    return {(k.n, c.ell_label): c for k, c in stats.items()}


def test_rq2_runtimes_and_sizes(experiment_results):
    cells = by_label(experiment_results("rq2")[1])
    bad = []
    for key, (T, S) in RQ2_REFERENCE.items():
        c = cells[key]
        if c.B != 0:
            bad.append(f"{key}: {c.run_count - c.success_count} capped")
            continue
        tol_T = max(0.2 * T, 3 * c.se_T)
        if abs(c.mean_T - T) > tol_T:
            bad.append(f"{key}: T {c.mean_T:.1f} vs {T}")
        if abs(c.mean_S - S) > 0.1 * S:
            bad.append(f"{key}: S {c.mean_S:.1f} vs {S}")
        if key[1] == "n" and any(r.leaf_count != key[0] for r in c.runs):
            bad.append(f"{key}: size not exactly n")
    worst = max(abs(cells[k].mean_T - T) / T for k, (T, _) in RQ2_REFERENCE.items())
    record("rq2 table", not bad, "; ".join(bad) or f"16 cells, largest runtime deviation {worst:.1%}")
    assert not bad


def test_rq1_stuck_runs_are_traps(experiment_results):
    cells = by_label(experiment_results("rq1")[1])
    nonzero = [k for k, c in cells.items() if k[1] in ("2n", "inf") and c.B != 0]
    stuck = [(k, r) for k, c in cells.items() if k[1] in ("n", "n+1") for r in c.runs if not r.success]
    not_traps = []
    for (n, label), r in stuck:
        ell = n if label == "n" else n + 1
        cfg = make_config(n, ell, deletion=DeletionMode.LEAF_ONLY)
        if not is_trap(parse(r.final_tree), cfg).is_trap:
            not_traps.append((n, label, r.final_tree))
    ok = not nonzero and len(stuck) >= 5 and not not_traps
    record("rq1 traps", ok, f"stuck at 2n/inf: {nonzero or 'none'}; pooled stuck {len(stuck)}; non-trap stuck runs {len(not_traps)}")
    assert not nonzero
    assert len(stuck) >= 5
    assert not not_traps, not_traps[:3]


def test_rq3_negations_block_the_search(experiment_results):
    cells = by_label(experiment_results("rq3")[1])
    c4 = cells[(4, "n")]
    checks = {
        "n=4 never stuck": all(cells[(4, l)].B == 0 for l in ("n", "n+1", "2n", "inf")),
        f"n=4 ell=n T {c4.mean_T:.1f} within 25% of 655.3": abs(c4.mean_T - 655.3) <= 0.25 * 655.3,
        "n in {12,16} all stuck": all(cells[(n, l)].B == 1 for n in (12, 16) for l in ("n", "n+1", "2n", "inf")),
        "n=8 B >= 0.96": all(cells[(8, l)].B >= 0.96 for l in ("n", "n+1", "2n", "inf")),
    }
    failed = [k for k, v in checks.items() if not v]
    record("rq3 negations", not failed, "; ".join(failed) or "; ".join(checks))
    assert not failed


def test_sampled_runs_are_short_and_small(experiment_results):
    cfg4, rq4 = experiment_results("rq4")
    _, rq5 = experiment_results("rq5")
    bad = []
    for name, stats in (("rq4", rq4), ("rq5", rq5)):
        for k, c in stats.items():
            if c.mean_T is None or c.mean_T > 125:
                bad.append(f"{name} {k}: T {c.mean_T}")
            if c.mean_S is None or c.mean_S > 20:
                bad.append(f"{name} {k}: S {c.mean_S}")
            if c.mean_ors_final is None or c.mean_ors_final > 0.5:
                bad.append(f"{name} {k}: final ORs {c.mean_ors_final}")
    cell = rq4[CellKey(50, None, 16, 4096)]
    good = sum(1 for r in cell.runs if Fraction(r.generalisation_error) <= Fraction(64, 4096))
    if good < 0.95 * cell.run_count:
        bad.append(f"only {good}/{cell.run_count} runs at s=4096 A=16 generalise within 64/4096")
    s_max = max(cfg4.s_values)
    for a in cfg4.A_values:
        k = CellKey(50, None, a, s_max)
        if not rq5[k].mean_S < rq4[k].mean_S:
            bad.append(f"A={a}: RQ5 size {rq5[k].mean_S:.2f} not below RQ4 {rq4[k].mean_S:.2f}")
    worst_T = max(c.mean_T for s in (rq4, rq5) for c in s.values())
    record("sampled runs", not bad, "; ".join(bad[:5]) or f"max mean T {worst_T:.1f}; {good}/{cell.run_count} runs generalise")
    assert not bad, bad[:5]


def test_runtime_grows_superlinearly(experiment_results):
    cells = by_label(experiment_results("rq2")[1])
    ratio = cells[(16, "n")].mean_T / cells[(4, "n")].mean_T
    record("runtime scaling", ratio >= 4, f"T(16)/T(4) = {ratio:.2f}")
    assert ratio >= 4


class TestDriftBounds:
    def test_condition_in_closed_form(self):
        failures = []
        for p in DEFAULT_GRID:
            for kind in ProcessKind:
                try:
                    spec = DriftProcessSpec(kind, p)
                except InvalidProcess:
                    failures.append(f"{kind.value} gamma={p.gamma} delta={p.delta} x0=gamma^{round(math.log(p.x0, p.gamma))}: probability > 1")
                    continue
                bad = [c for c in check_condition(spec) if not c.holds]
                if bad:
                    failures.append(f"{kind.value} gamma={p.gamma} delta={p.delta} x0=gamma^{round(math.log(p.x0, p.gamma))}: fails at {len(bad)} state(s)")
        record("drift bounds", not failures, f"drift condition fails for {len(failures)}/36 pairs" if failures else "drift condition holds on the grid")
        assert not failures, failures

    def test_empirical_hitting_time_below_bound(self):
        reports = validate_grid(DEFAULT_GRID, runs=10_000, seed=0)
        checked = [r for r in reports if r.admissible]
        bad = [r for r in checked if not r.bound_holds]
        record("drift bounds", not bad, f"hitting-time bound holds at {len(checked) - len(bad)}/{len(checked)} constructible pairs")
        assert not bad

    def test_beats_multiplicative_bound(self):
        sm = smdrift_bound(DriftParams(2, Fraction(1, 100), 2**64))
        mult = multiplicative_drift_bound(Fraction(1, 100), 2**64)
        record("drift bounds", sm < mult, f"{sm:.1f} < {mult:.1f}")
        assert sm < mult


class TestOracles:
    def test_projection_equals_enumeration(self):
        rnd = random.Random(7)
        mismatches = 0
        for n in range(1, 13):
            for i in range(1000):
                neg = i % 2 == 1
                t = random_tree(rnd, rnd.randint(1, 2 * n + 2), literal_set(n, neg))
                spec = ProblemSpec(Target.AND if i % 4 < 2 else Target.OR, n, neg)
                mismatches += exact_error(t, spec) != brute_force_error(t, spec)
        record("exact oracles", mismatches == 0, f"exact error mismatches on 12000 trees: {mismatches}")
        assert mismatches == 0

    def test_root_and_drift(self):
        rnd = random.Random(8)
        below = []
        for _ in range(100):
            n = rnd.randint(2, 8)
            ell = 2 * n
            t = random_tree(rnd, rnd.randint(1, ell - 1), literal_set(n))
            r = one_step_drift(t, make_config(n, ell, deletion=DeletionMode.SUBTREE))
            if r.exact_drift < r.lower_bound:
                below.append(str(t))
        record("exact oracles", not below, f"drift below f/(12 ell n) on {len(below)}/100 trees")
        assert not below

    def test_concentration_grid(self):
        failed = []
        for n in (8, 16, 32):
            lg = n.bit_length() - 1
            for c in (1, 2):
                s = n**c * lg * lg
                for G in (Fraction(0), Fraction(1, n ** (c + 1)), Fraction(1, n**c), Fraction(1, n), Fraction(1, 4), Fraction(1, 2)):
                    if not concentration_check(ConcentrationSpec(s, G, n, c)).passed:
                        failed.append((n, c, G))
        record("exact oracles", not failed, f"concentration failures: {failed or 'none'} over 36 points")
        assert not failed


def test_experiment_output_is_deterministic(tmp_path):
    dirs = []
    for par in (1, 2):
        d = tmp_path / f"p{par}"
        assert main(["experiment", "rq2", "--seed", "42", "--out", str(d), "--parallelism", str(par), "--quiet"]) == 0
        dirs.append(d)
    names = sorted(p.name for p in dirs[0].iterdir())
    _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    ok = not mismatch and not errors and names == sorted(p.name for p in dirs[1].iterdir())
    record("determinism", ok, f"{len(names)} files compared at parallelism 1 and 2; differing: {mismatch or 'none'}")
    assert ok
