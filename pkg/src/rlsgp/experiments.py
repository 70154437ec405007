"""Batch harness for the five experiment families.

Every run's seed is derived from the master seed and the run's
coordinates, so results do not depend on how runs are scheduled across
worker processes.
"""

from __future__ import annotations

import enum
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .engine import CompleteTable, Outcome, Sampled, derive_seed, make_config, run
from .fitness import Estimate, Target
from .mutation import DeletionMode

__all__ = [
    "RQ",
    "Ell",
    "ExperimentConfig",
    "CellKey",
    "RunRecord",
    "CellStats",
    "run_experiment",
    "emit_tsv",
    "DEFAULT_S_VALUES",
]

DEFAULT_S_VALUES = tuple(2**k for k in range(3, 15))  # 8 .. 16384
DEFAULT_A_VALUES = (0, 8, 16, 32)


class RQ(enum.Enum):
    RQ1 = "rq1"
    RQ2 = "rq2"
    RQ3 = "rq3"
    RQ4 = "rq4"
    RQ5 = "rq5"

    @property
    def index(self) -> int:
        return int(self.value[2:])

    @property
    def sampled(self) -> bool:
        return self in (RQ.RQ4, RQ.RQ5)

    @property
    def negations(self) -> bool:
        return self in (RQ.RQ3, RQ.RQ5)

    @property
    def deletion(self) -> DeletionMode:
        return DeletionMode.LEAF_ONLY if self is RQ.RQ1 else DeletionMode.SUBTREE


@dataclass(frozen=True)
class Ell:
    """A leaf limit, symbolic in ``n`` (``"n"``, ``"n+1"``, ``"2n"``, ``"inf"``) or absolute."""

    text: str

    def __post_init__(self):
        t = self.text.strip().lower().replace(" ", "")
        if t in ("∞", "unbounded", "none"):
            t = "inf"
        if t not in ("n", "n+1", "2n", "inf") and not (t.isdigit() and int(t) > 0):
            raise ValueError(f"leaf limit must be n, n+1, 2n, inf or a positive integer, got {self.text!r}")
        object.__setattr__(self, "text", t)

    def resolve(self, n: int) -> int | None:
        if self.text.isdigit():
            return int(self.text)
        return {"n": n, "n+1": n + 1, "2n": 2 * n, "inf": None}[self.text]

    def __str__(self) -> str:
        return self.text


SYMBOLIC_ELLS = (Ell("n"), Ell("n+1"), Ell("2n"), Ell("inf"))


@dataclass(frozen=True)
class ExperimentConfig:
    rq: RQ
    n_values: tuple[int, ...] = (4, 8, 12, 16)
    ell_policy: tuple[Ell, ...] = SYMBOLIC_ELLS
    runs_per_cell: int = 500
    max_iterations: int = 10_000
    A_values: tuple[int, ...] = DEFAULT_A_VALUES
    s_values: tuple[int, ...] = DEFAULT_S_VALUES
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ell_policy", tuple(e if isinstance(e, Ell) else Ell(str(e)) for e in self.ell_policy))
        for name in ("n_values", "A_values", "s_values"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.runs_per_cell < 1 or self.max_iterations < 1:
            raise ValueError("runs_per_cell and max_iterations must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not self.n_values or not self.ell_policy:
            raise ValueError("need at least one n and one leaf limit")
        if self.rq.sampled and (not self.A_values or not self.s_values):
            raise ValueError("sampled experiments need A and s values")
        if any(a < 0 for a in self.A_values) or any(s < 1 for s in self.s_values):
            raise ValueError("A must be >= 0 and s >= 1")

    @classmethod
    def default(cls, rq: RQ | str, master_seed: int = 0, runs_per_cell: int = 500, **overrides) -> ExperimentConfig:
        rq = RQ(rq) if isinstance(rq, str) else rq
        if rq.sampled:
            base = dict(n_values=(50,), ell_policy=(Ell("inf"),))
        else:
            base = {}
        base.update(overrides)
        return cls(rq, runs_per_cell=runs_per_cell, master_seed=master_seed, **base)

    def cells(self) -> list[tuple[CellKey, str]]:
        """Cell keys with the leaf-limit label, in output order."""
        out = []
        for n in self.n_values:
            for ell in self.ell_policy:
                if self.rq.sampled:
                    for a in self.A_values:
                        for s in self.s_values:
                            out.append((CellKey(n, ell.resolve(n), a, s), str(ell)))
                else:
                    out.append((CellKey(n, ell.resolve(n)), str(ell)))
        return out

    def as_dict(self) -> dict:
        d = asdict(self)
        d["rq"] = self.rq.value
        d["ell_policy"] = [str(e) for e in self.ell_policy]
        return d


class CellKey(NamedTuple):
    n: int
    ell: int | None
    A: int | None = None
    s: int | None = None


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    seed: int
    outcome: Outcome
    iterations: int
    leaf_count: int
    ors_inserted: int
    ors_final: int
    generalisation_error: Fraction | float
    generalisation_exact: bool
    final_tree: str

    @property
    def success(self) -> bool:
        return self.outcome is not Outcome.HIT_ITERATION_CAP


def _mean_std(xs: list[float]) -> tuple[float | None, float | None]:
    if not xs:
        return None, None
    m = math.fsum(xs) / len(xs)
    return m, (statistics.stdev(xs) if len(xs) > 1 else None)


@dataclass(frozen=True)
class CellStats:
    """Per-cell aggregates. Means and deviations are over successful runs only."""

    key: CellKey
    ell_label: str
    run_count: int
    success_count: int
    mean_T: float | None
    std_T: float | None
    mean_S: float | None
    std_S: float | None
    mean_ors_inserted: float | None
    mean_ors_final: float | None
    mean_generalisation_error: float | None
    runs: tuple[RunRecord, ...] = field(repr=False, compare=False, default=())

    @property
    def B(self) -> float:
        return 1 - self.success_count / self.run_count

    @property
    def se_T(self) -> float | None:
        if self.std_T is None:
            return None
        return self.std_T / math.sqrt(self.success_count)

    @classmethod
    def from_runs(cls, key: CellKey, label: str, runs: Iterable[RunRecord]) -> CellStats:
        runs = tuple(sorted(runs, key=lambda r: r.run_index))
        ok = [r for r in runs if r.success]
        mt, st = _mean_std([r.iterations for r in ok])
        ms, ss = _mean_std([r.leaf_count for r in ok])
        return cls(
            key=key,
            ell_label=label,
            run_count=len(runs),
            success_count=len(ok),
            mean_T=mt,
            std_T=st,
            mean_S=ms,
            std_S=ss,
            mean_ors_inserted=_mean_std([r.ors_inserted for r in ok])[0],
            mean_ors_final=_mean_std([r.ors_final for r in ok])[0],
            mean_generalisation_error=_mean_std([float(r.generalisation_error) for r in ok])[0],
            runs=runs,
        )


# --- execution ----------------------------------------------------------------------------


def _seed_for(cfg: ExperimentConfig, key: CellKey, run_index: int) -> int:
    ell_code = 0 if key.ell is None else key.ell + 1
    a_code = 0 if key.A is None else key.A + 1
    s_code = 0 if key.s is None else key.s
    return derive_seed(cfg.master_seed, cfg.rq.index, key.n, ell_code, a_code, s_code, run_index)


def _one_run(cfg: ExperimentConfig, key: CellKey, run_index: int) -> RunRecord:
    seed = _seed_for(cfg, key, run_index)
    fitness = Sampled(key.s, key.A) if cfg.rq.sampled else CompleteTable()
    rc = make_config(
        key.n,
        key.ell,
        target=Target.AND,
        negations=cfg.rq.negations,
        deletion=cfg.rq.deletion,
        fitness=fitness,
        max_iterations=cfg.max_iterations,
        seed=seed,
    )
    res = run(rc)
    gen = res.final_generalisation_error
    exact = not isinstance(gen, Estimate)
    return RunRecord(
        run_index=run_index,
        seed=seed,
        outcome=res.outcome,
        iterations=res.iterations,
        leaf_count=res.leaf_count,
        ors_inserted=res.ors_accepted_during_run,
        ors_final=res.ors_in_final_tree,
        generalisation_error=gen if exact else gen.value,
        generalisation_exact=exact,
        final_tree=str(res.final_tree),
    )


def _run_chunk(task: tuple[ExperimentConfig, CellKey, int, int]) -> tuple[CellKey, list[RunRecord]]:
    cfg, key, lo, hi = task
    return key, [_one_run(cfg, key, i) for i in range(lo, hi)]


def run_experiment(
    cfg: ExperimentConfig,
    parallelism: int | None = 1,
    progress: Callable[[CellKey, int], None] | None = None,
    chunk: int = 50,
) -> dict[CellKey, CellStats]:
    """Execute every cell and aggregate. Output is independent of ``parallelism``.

    ``parallelism=None`` uses every available CPU. ``progress`` is called
    with each finished chunk's cell and size.
    """
    if parallelism is None:
        parallelism = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    cells = cfg.cells()
    labels = dict(cells)
    tasks = [(cfg, key, lo, min(lo + chunk, cfg.runs_per_cell)) for key, _ in cells for lo in range(0, cfg.runs_per_cell, chunk)]
    collected: dict[CellKey, list[RunRecord]] = {key: [] for key, _ in cells}

    def absorb(key, recs):
        collected[key].extend(recs)
        if progress is not None:
            progress(key, len(recs))

    if parallelism <= 1:
        for t in tasks:
            absorb(*_run_chunk(t))
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for key, recs in pool.map(_run_chunk, tasks):
                absorb(key, recs)
    return {key: CellStats.from_runs(key, labels[key], collected[key]) for key, _ in cells}


# --- output -------------------------------------------------------------------------------


def _fmt(x: float | None, digits: int) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


FIGURE_METRICS = {
    # file prefix: (statistic, decimals)
    "runtime": ("T", 1),
    "treesize": ("S", 1),
    "insOR": ("ors_inserted", 3),
    "finOR": ("ors_final", 3),
}


def _metric_values(stats: CellStats, metric: str) -> list[float]:
    attr = {"T": "iterations", "S": "leaf_count", "ors_inserted": "ors_inserted", "ors_final": "ors_final"}[metric]
    return [getattr(r, attr) for r in stats.runs if r.success]


def emit_tsv(stats: dict[CellKey, CellStats], destination: str | os.PathLike, cfg: ExperimentConfig) -> list[Path]:
    """Write the summary tables (or figure series), a per-run log and a manifest.

    Complete-table experiments produce ``table-<rq>.tsv``; sampled ones
    produce ``<metric>-n<n>-l<ell>-s<A>.tsv`` with columns ``s``, mean, std.
    """
    if not stats:
        raise ValueError("nothing to write")
    out = Path(destination)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    order = [k for k, _ in cfg.cells() if k in stats]

    def write(name: str, lines: list[str]):
        path = out / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        written.append(path)

    if not cfg.rq.sampled:
        lines = ["n\tell\tB\tmean_T\tstd_T\tmean_S\tstd_S"]
        for k in order:
            c = stats[k]
            lines.append(
                "\t".join(
                    [str(k.n), c.ell_label, f"{c.B:.3f}", _fmt(c.mean_T, 1), _fmt(c.std_T, 1), _fmt(c.mean_S, 1), _fmt(c.std_S, 1)]
                )
            )
        write(f"table-{cfg.rq.value}.tsv", lines)
    else:
        groups: dict[tuple[int, str, int], list[CellKey]] = {}
        for k in order:
            groups.setdefault((k.n, stats[k].ell_label, k.A), []).append(k)
        for (n, label, a), keys in groups.items():
            ell_tag = "inf" if label == "inf" else str(stats[keys[0]].key.ell)
            for prefix, (metric, digits) in FIGURE_METRICS.items():
                lines = ["s\tmean\tstd"]
                for k in sorted(keys, key=lambda k: k.s):
                    m, sd = _mean_std(_metric_values(stats[k], metric))
                    lines.append(f"{k.s}\t{_fmt(m, digits)}\t{_fmt(sd, digits)}")
                write(f"{prefix}-n{n}-l{ell_tag}-s{a}.tsv", lines)

    log = ["n\tell\tA\ts\trun\tseed\toutcome\tT\tS\tors_inserted\tors_final\tgen_error\ttree"]
    for k in order:
        c = stats[k]
        for r in c.runs:
            g = r.generalisation_error
            gtext = f"{g.numerator}/{g.denominator}" if isinstance(g, Fraction) else f"~{g:.6g}"
            log.append(
                "\t".join(
                    map(
                        str,
                        [k.n, c.ell_label, "-" if k.A is None else k.A, "-" if k.s is None else k.s, r.run_index, r.seed,
                         r.outcome.value, r.iterations, r.leaf_count, r.ors_inserted, r.ors_final, gtext, r.final_tree],
                    )
                )
            )
    write(f"runs-{cfg.rq.value}.tsv", log)

    manifest = {"config": cfg.as_dict(), "files": sorted(p.name for p in written)}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    written.append(path)
    return written
