import json
import math
import random

import pytest

from rlsgp.engine import Outcome
from rlsgp.experiments import RQ, CellKey, CellStats, Ell, ExperimentConfig, emit_tsv, run_experiment
from rlsgp.mutation import DeletionMode


class TestEll:
    @pytest.mark.parametrize("text,n,want", [("n", 8, 8), ("n+1", 8, 9), ("2n", 8, 16), ("inf", 8, None), ("13", 8, 13)])
    def test_resolve(self, text, n, want):
        assert Ell(text).resolve(n) == want

    @pytest.mark.parametrize("text", ["3n", "n+2", "0", "-1", "", "infinity"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            Ell(text)


class TestConfig:
    def test_rq_setups(self):
        assert (RQ.RQ1.deletion, RQ.RQ1.negations, RQ.RQ1.sampled) == (DeletionMode.LEAF_ONLY, False, False)
        assert (RQ.RQ2.deletion, RQ.RQ2.negations, RQ.RQ2.sampled) == (DeletionMode.SUBTREE, False, False)
        assert (RQ.RQ3.deletion, RQ.RQ3.negations, RQ.RQ3.sampled) == (DeletionMode.SUBTREE, True, False)
        assert (RQ.RQ4.deletion, RQ.RQ4.negations, RQ.RQ4.sampled) == (DeletionMode.SUBTREE, False, True)
        assert (RQ.RQ5.deletion, RQ.RQ5.negations, RQ.RQ5.sampled) == (DeletionMode.SUBTREE, True, True)

    def test_defaults(self):
        c = ExperimentConfig.default("rq4")
        assert c.n_values == (50,) and [str(e) for e in c.ell_policy] == ["inf"]
        assert c.s_values == tuple(2**k for k in range(3, 15)) and c.A_values == (0, 8, 16, 32)
        assert len(c.cells()) == 48
        assert len(ExperimentConfig.default("rq1").cells()) == 16

    def test_invalid(self):
        with pytest.raises(ValueError):
            ExperimentConfig(RQ.RQ2, runs_per_cell=0)
        with pytest.raises(ValueError):
            ExperimentConfig(RQ.RQ4, s_values=())


def small(rq="rq2", **kw):
    kw.setdefault("n_values", (4, 6))
    return ExperimentConfig.default(rq, master_seed=5, runs_per_cell=12, **kw)


class TestDeterminism:
    def test_chunking_does_not_matter(self):
        a = run_experiment(small(), chunk=50)
        b = run_experiment(small(), chunk=5)
        assert a == b
        assert all(x.runs == y.runs for x, y in zip(a.values(), b.values()))

    def test_parallel_matches_serial(self):
        cfg = small()
        serial = run_experiment(cfg, parallelism=1, chunk=4)
        par = run_experiment(cfg, parallelism=2, chunk=4)
        assert [c.runs for c in serial.values()] == [c.runs for c in par.values()]

    def test_seeds_differ_between_cells_and_runs(self):
        stats = run_experiment(small())
        seeds = [r.seed for c in stats.values() for r in c.runs]
        assert len(set(seeds)) == len(seeds)

    def test_master_seed_matters(self):
        a = run_experiment(small())
        b = run_experiment(ExperimentConfig.default("rq2", master_seed=6, runs_per_cell=12, n_values=(4, 6)))
        assert [c.runs for c in a.values()] != [c.runs for c in b.values()]

    def test_aggregation_ignores_completion_order(self):
        stats = run_experiment(small())
        for key, cell in stats.items():
            runs = list(cell.runs)
            random.Random(1).shuffle(runs)
            assert CellStats.from_runs(key, cell.ell_label, runs) == cell


class TestStats:
    def test_over_successful_runs_only(self):
        cfg = ExperimentConfig.default("rq1", master_seed=1, runs_per_cell=30, n_values=(4,), ell_policy=("n",), max_iterations=30)
        (cell,) = run_experiment(cfg).values()
        ok = [r for r in cell.runs if r.outcome is not Outcome.HIT_ITERATION_CAP]
        assert 0 < len(ok) < 30
        assert cell.B == pytest.approx(1 - len(ok) / 30)
        assert cell.mean_T == pytest.approx(sum(r.iterations for r in ok) / len(ok))
        m = cell.mean_T
        assert cell.std_T == pytest.approx(math.sqrt(sum((r.iterations - m) ** 2 for r in ok) / (len(ok) - 1)))


class TestOutput:
    def test_table(self, tmp_path):
        cfg = small()
        stats = run_experiment(cfg)
        emit_tsv(stats, tmp_path, cfg)
        lines = (tmp_path / "table-rq2.tsv").read_text().splitlines()
        assert lines[0].split("\t") == ["n", "ell", "B", "mean_T", "std_T", "mean_S", "std_S"]
        assert len(lines) == 1 + 8
        row = lines[1].split("\t")
        assert row[:3] == ["4", "n", "0.000"] and row[5] == "4.0"
        assert all(len(r.split(".")[-1]) == 1 for r in row[3:])
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["master_seed"] == 5 and "table-rq2.tsv" in manifest["files"]

    def test_figure_files(self, tmp_path):
        cfg = ExperimentConfig.default("rq4", master_seed=2, runs_per_cell=4, s_values=(8, 64), A_values=(0, 32))
        emit_tsv(run_experiment(cfg), tmp_path, cfg)
        names = {p.name for p in tmp_path.iterdir()}
        for metric in ("runtime", "treesize", "insOR", "finOR"):
            for a in (0, 32):
                assert f"{metric}-n50-linf-s{a}.tsv" in names
        lines = (tmp_path / "runtime-n50-linf-s0.tsv").read_text().splitlines()
        assert lines[0] == "s\tmean\tstd" and [l.split("\t")[0] for l in lines[1:]] == ["8", "64"]
        assert len((tmp_path / "finOR-n50-linf-s0.tsv").read_text().splitlines()[1].split("\t")[1].split(".")[1]) == 3

    def test_byte_identical_rerun(self, tmp_path):
        cfg = small()
        emit_tsv(run_experiment(cfg), tmp_path / "a", cfg)
        emit_tsv(run_experiment(cfg), tmp_path / "b", cfg)
        for p in (tmp_path / "a").iterdir():
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()

    def test_empty_stats_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_tsv({}, tmp_path, small())


def _cell(stats, n, label):
    return next(c for k, c in stats.items() if k.n == n and c.ell_label == label)


class TestReferenceCells:
    def test_rq2_n8_2n(self, experiment_results):
        cell = _cell(experiment_results("rq2")[1], 8, "2n")
        assert cell.B == 0
        assert abs(cell.mean_T - 93.5) <= 3 * cell.se_T
        assert abs(cell.mean_S - 11.3) <= 3 * cell.std_S / math.sqrt(cell.success_count)

    def test_rq3_n12_all_stuck(self, experiment_results):
        stats = experiment_results("rq3")[1]
        assert all(c.B == 1 for k, c in stats.items() if k.n == 12)

    def test_rq1_n4_2n(self, experiment_results):
        assert _cell(experiment_results("rq1")[1], 4, "2n").B == 0

    @pytest.mark.parametrize("rq", ["rq4", "rq5"])
    def test_larger_threshold_gives_smaller_trees(self, rq, experiment_results):
        stats = experiment_results(rq)[1]
        for s in ExperimentConfig.default(rq).s_values:
            big = stats[CellKey(50, None, 32, s)].mean_S
            zero = stats[CellKey(50, None, 0, s)].mean_S
            assert big <= zero, s
