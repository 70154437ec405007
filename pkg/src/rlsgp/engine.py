"""The RLS-GP loop: mutate once, keep the offspring if it is within the leaf
limit and not worse, stop at the optimum, at the sampled-error threshold, or
at the iteration cap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import TooManyVariables
from .fitness import (
    Estimate,
    ProblemSpec,
    Target,
    TruthTableFitness,
    _eval_bits,
    draw_sample,
    exact_error,
    generalisation_error,
)
from . import kernel
from .mutation import DeletionMode, MutationConfig, Operation, hvl_prime_traced
from .rng import RandomStream
from .tree import EMPTY, Leaf, Op, SyntaxTree, _walk, tree_stats

__all__ = [
    "CompleteTable",
    "Sampled",
    "Outcome",
    "RunConfig",
    "RunResult",
    "RunState",
    "make_config",
    "run",
    "semantic_equals_target",
    "derive_seed",
]


@dataclass(frozen=True)
class CompleteTable:
    """Fitness is the exact error over all ``2**n`` inputs."""

    def __str__(self) -> str:
        return "ctt"


@dataclass(frozen=True)
class Sampled:
    """Fitness is the error on ``s`` fresh uniform rows drawn every iteration.

    The run stops once the incumbent's sampled error is at most
    ``accept_threshold``.
    """

    s: int
    accept_threshold: int = 0

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.accept_threshold < 0:
            raise ValueError("accept_threshold must be >= 0")

    def __str__(self) -> str:
        return f"sample:{self.s}"


class Outcome(enum.Enum):
    FOUND_OPTIMUM = "found_optimum"
    MET_THRESHOLD = "met_threshold"
    HIT_ITERATION_CAP = "hit_iteration_cap"


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    mutation: MutationConfig
    fitness: CompleteTable | Sampled = CompleteTable()
    max_iterations: int = 10_000
    seed: int = 0
    initial_tree: SyntaxTree = EMPTY

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if set(self.mutation.literals) != set(self.problem.literals()):
            raise ValueError("mutation literal set does not match the problem's literal set")
        stray = {t.literal for t in _walk(self.initial_tree) if type(t) is Leaf} - set(self.mutation.literals)
        if stray:
            raise ValueError(f"initial tree uses literals outside the literal set: {sorted(map(str, stray))}")


def make_config(
    n: int,
    ell: int | None = None,
    *,
    target: Target = Target.AND,
    negations: bool = False,
    deletion: DeletionMode = DeletionMode.SUBTREE,
    fitness: CompleteTable | Sampled = CompleteTable(),
    max_iterations: int = 10_000,
    seed: int = 0,
    initial_tree: SyntaxTree = EMPTY,
) -> RunConfig:
    """Shorthand for the usual F = {AND, OR} setup."""
    problem = ProblemSpec(target, n, negations, ell)
    mutation = MutationConfig.standard(n, negations, deletion)
    return RunConfig(problem, mutation, fitness, max_iterations, seed, initial_tree)


@dataclass
class RunResult:
    outcome: Outcome
    iterations: int
    final_tree: SyntaxTree
    final_exact_error: int | Estimate
    final_generalisation_error: Fraction | Estimate
    ors_accepted_during_run: int
    ors_in_final_tree: int
    accepted_mutations: int
    history: list[tuple[int, int]] | None = field(default=None, repr=False, compare=False)

    @property
    def leaf_count(self) -> int:
        return self.final_tree.leaf_count

    @property
    def success(self) -> bool:
        return self.outcome is not Outcome.HIT_ITERATION_CAP


def derive_seed(master_seed: int, *keys: int) -> int:
    """64-bit seed for one run, mixed from the master seed and a key path."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


class RunState:
    """One isolated run. Call :meth:`step` until :attr:`outcome` is set.

    ``fitness`` holds the incumbent's exact error (complete-table mode) or
    its sampled error on the most recent sample (sampled mode).
    """

    def __init__(self, cfg: RunConfig, record_history: bool = False):
        self.cfg = cfg
        self.rng = RandomStream(cfg.seed)
        self.tree = cfg.initial_tree
        self.iterations = 0
        self.accepted = 0
        self.ors_accepted = 0
        self.outcome: Outcome | None = None
        self._ell = cfg.problem.size_limit
        self._sampled = isinstance(cfg.fitness, Sampled)
        self.history = [] if record_history else None
        if self._sampled:
            self.fitness = cfg.fitness.s if self.tree is EMPTY else None
        else:
            self._exact = TruthTableFitness(cfg.problem)
            self.fitness = self._exact(self.tree)
            if self.fitness == 0 and self.tree is not EMPTY:
                self.outcome = Outcome.FOUND_OPTIMUM

    def _within_limit(self, tree: SyntaxTree) -> bool:
        return self._ell is None or tree.leaf_count <= self._ell

    def step(self) -> bool:
        """Run one iteration; return whether the offspring was accepted."""
        cfg = self.cfg
        offspring, move = hvl_prime_traced(self.tree, cfg.mutation, self.rng)
        accepted = False
        if self._sampled:
            accepted = self._sampled_step(offspring)
        elif self._within_limit(offspring):
            if move.operation is Operation.DEL:
                spine = move.at[:-1] if move.at else ()
            else:
                spine = move.at or ()
            f_off = self._exact.offspring_error(self.tree, self.fitness, offspring, spine)
            if f_off <= self.fitness:
                self.tree, self.fitness, accepted = offspring, f_off, True
        if accepted:
            self.accepted += 1
            if move.operation is Operation.INS and move.function is Op.OR:
                self.ors_accepted += 1
        self.iterations += 1
        if self.history is not None:
            self.history.append((self.tree.leaf_count, self.fitness))

        if self._sampled:
            if self.tree is not EMPTY and self.fitness <= cfg.fitness.accept_threshold:
                self.outcome = Outcome.MET_THRESHOLD
        elif self.fitness == 0:
            self.outcome = Outcome.FOUND_OPTIMUM
        if self.outcome is None and self.iterations >= cfg.max_iterations:
            self.outcome = Outcome.HIT_ITERATION_CAP
        return accepted

    def _sampled_step(self, offspring: SyntaxTree) -> bool:
        # one sample per iteration scores parent, offspring and the stopping test
        spec = self.cfg.problem
        s = self.cfg.fitness.s
        sample = draw_sample(spec.n, s, self.rng)
        cols = (0,) + sample.columns
        full = (1 << s) - 1
        target = sample.target_column(spec.target)

        def err(tree):
            if tree is EMPTY:
                return s
            return (_eval_bits(tree, cols, full) ^ target).bit_count()

        f_parent = err(self.tree)
        if self._within_limit(offspring):
            f_off = err(offspring)
            if f_off <= f_parent:
                self.tree, self.fitness = offspring, f_off
                return True
        self.fitness = f_parent
        return False

    def result(self) -> RunResult:
        if self.outcome is None:
            raise RuntimeError("run has not terminated")
        tree = self.tree
        spec = self.cfg.problem
        if tree is EMPTY:
            err, gen = 1 << spec.n, Fraction(1)
        elif not self._sampled:
            err, gen = self.fitness, Fraction(self.fitness, 1 << spec.n)
        else:
            try:
                err = exact_error(tree, spec)
                gen = Fraction(err, 1 << spec.n)
            except TooManyVariables:
                gen = generalisation_error(tree, spec, RandomStream(self.cfg.seed))
                err = Estimate(gen.value * 2**spec.n, gen.stderr * 2**spec.n, gen.rows)
        return RunResult(
            outcome=self.outcome,
            iterations=self.iterations,
            final_tree=tree,
            final_exact_error=err,
            final_generalisation_error=gen,
            ors_accepted_during_run=self.ors_accepted,
            ors_in_final_tree=tree_stats(tree).or_count,
            accepted_mutations=self.accepted,
            history=self.history,
        )


def run(cfg: RunConfig, record_history: bool = False, compiled: bool | None = None) -> RunResult:
    """Run to termination.

    Complete-table runs without history go through the compiled loop when
    ``n`` allows it; ``compiled=False`` forces the reference stepper.
    Both give the same result for the same configuration.
    """
    if compiled is None:
        compiled = not record_history and _kernel_applies(cfg)
    elif compiled and (record_history or not _kernel_applies(cfg)):
        raise ValueError("the compiled loop needs complete-table fitness, n <= 20 and no history")
    if compiled:
        return _run_compiled(cfg)
    state = RunState(cfg, record_history)
    while state.outcome is None:
        state.step()
    return state.result()


def _kernel_applies(cfg: RunConfig) -> bool:
    return (
        isinstance(cfg.fitness, CompleteTable)
        and cfg.problem.n <= kernel.MAX_KERNEL_VARS
        and set(cfg.mutation.functions) <= {Op.AND, Op.OR}
    )


_WORD_BLOCK = 4096


def _run_compiled(cfg: RunConfig) -> RunResult:
    spec = cfg.problem
    lits = cfg.mutation.literals
    stream = RandomStream(cfg.seed)
    code = kernel.encode(cfg.initial_tree, lits)
    funcs = np.array([kernel.OP_AND if f is Op.AND else kernel.OP_OR for f in cfg.mutation.functions], dtype=np.int64)
    cols = kernel.literal_columns(lits, spec.n)
    target = kernel.target_words(spec.target, spec.n)
    ell = -1 if spec.size_limit is None else spec.size_limit
    subtree = cfg.mutation.deletion is DeletionMode.SUBTREE
    m, fit, iterations, accepted, ors = len(code), -1, 0, 0, 0
    words, pos = stream.words(_WORD_BLOCK), 0
    while True:
        status, code, m, fit, iterations, accepted, ors, pos = kernel.run_complete_table(
            code, m, fit, iterations, accepted, ors, cols, target, funcs, subtree, ell,
            cfg.max_iterations, 1 << spec.n, words, pos,
        )
        if status != kernel.NEED_WORDS:
            break
        words, pos = np.concatenate((words[pos:], stream.words(_WORD_BLOCK))), 0
    tree = kernel.decode(code, m, lits)
    if tree is EMPTY:
        err, gen = 1 << spec.n, Fraction(1)
    else:
        err = exact_error(tree, spec)
        gen = Fraction(err, 1 << spec.n)
    return RunResult(
        outcome=Outcome.FOUND_OPTIMUM if status == kernel.OUTCOME_OPTIMUM else Outcome.HIT_ITERATION_CAP,
        iterations=int(iterations),
        final_tree=tree,
        final_exact_error=err,
        final_generalisation_error=gen,
        ors_accepted_during_run=int(ors),
        ors_in_final_tree=tree_stats(tree).or_count,
        accepted_mutations=int(accepted),
    )


def semantic_equals_target(tree: SyntaxTree, spec: ProblemSpec) -> bool:
    return tree is not EMPTY and exact_error(tree, spec) == 0
