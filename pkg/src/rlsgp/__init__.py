"""Randomised local search genetic programming (RLS-GP) for conjunctions and disjunctions.

Modules: :mod:`~rlsgp.tree` (program trees), :mod:`~rlsgp.mutation`
(HVL-Prime), :mod:`~rlsgp.fitness` (exact and sampled error),
:mod:`~rlsgp.engine` (the search loop), :mod:`~rlsgp.oracle` (exact
one-step checks), :mod:`~rlsgp.drift` (hitting-time bounds) and
:mod:`~rlsgp.experiments` (batch harness).
"""

from .drift import DriftParams, DriftProcessSpec, ProcessKind, multiplicative_drift_bound, simulate_hitting_time, smdrift_bound
from .engine import CompleteTable, Outcome, RunConfig, RunResult, RunState, Sampled, derive_seed, make_config, run
from .errors import (
    ArityError,
    EmptyTreeError,
    InvalidNodeRef,
    InvalidProcess,
    LiteralIndexError,
    RLSGPError,
    TooManyVariables,
    TreeSyntaxError,
)
from .experiments import RQ, CellKey, CellStats, Ell, ExperimentConfig, emit_tsv, run_experiment
from .fitness import (
    Estimate,
    ProblemSpec,
    Sample,
    Target,
    closed_form_error,
    draw_sample,
    exact_error,
    generalisation_error,
    sampled_error,
    semantically_equal,
)
from .mutation import DeletionMode, MutationConfig, Operation, enumerate_outcomes, hvl_prime
from .oracle import ConcentrationSpec, concentration_check, is_trap, one_step_drift
from .rng import RandomStream
from .tree import EMPTY, Leaf, Literal, Node, Op, SyntaxTree, parse, to_text

__version__ = "0.1.0"
