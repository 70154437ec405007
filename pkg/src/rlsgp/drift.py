"""Super-multiplicative drift: the hitting-time bound, a multiplicative
reference bound, two synthetic processes whose expected progress is
``(log_gamma(x) + 1) * delta * x``, and a Monte Carlo validator.

Parameters given as floats are read as the decimal literal they print as
(``0.1`` is exactly ``1/10``), so that probabilities that should be exactly
1 are.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InvalidProcess

__all__ = [
    "DriftParams",
    "ProcessKind",
    "DriftProcessSpec",
    "ConditionCheck",
    "HittingTimeStats",
    "GridPointReport",
    "DEFAULT_GRID",
    "smdrift_bound",
    "multiplicative_drift_bound",
    "check_condition",
    "expected_hitting_time",
    "simulate_hitting_time",
    "validate_grid",
]

# float slack for comparisons that are exact equalities in rationals but go
# through irrational logarithms here
_REL_TOL = 1e-12


def _exact(v) -> Fraction:
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def _log_base(gamma: Fraction, x: Fraction) -> Fraction | float:
    """``log_gamma(x)``, exact when ``x`` is an integral power of ``gamma``."""
    approx = math.log(x) / math.log(gamma)
    k = round(approx)
    if gamma**k == x:
        return Fraction(k)
    return approx


@dataclass(frozen=True)
class DriftParams:
    gamma: Fraction
    delta: Fraction
    x0: Fraction

    def __post_init__(self):
        for name in ("gamma", "delta", "x0"):
            object.__setattr__(self, name, _exact(getattr(self, name)))
        if self.gamma <= 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.x0 != 0 and self.x0 < 1:
            raise ValueError(f"x0 must be 0 or at least 1, got {self.x0}")


def smdrift_bound(params: DriftParams) -> float:
    """``3/delta + 2 (2 + log2 log_gamma max(gamma, x0)) ln(gamma) / delta``."""
    g = float(params.gamma)
    d = float(params.delta)
    top = max(params.gamma, params.x0)
    inner = float(_log_base(params.gamma, top))
    return 3 / d + 2 * (2 + math.log2(inner)) * math.log(g) / d


def multiplicative_drift_bound(delta, x0, xmin=1) -> float:
    """``(1 + ln(x0 / xmin)) / delta``."""
    delta, x0, xmin = float(delta), float(x0), float(xmin)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not x0 >= xmin >= 1:
        raise ValueError("need x0 >= xmin >= 1")
    return (1 + math.log(x0 / xmin)) / delta


class ProcessKind(enum.Enum):
    JUMP_TO_ZERO = "jump"
    HALVING = "halving"


@dataclass(frozen=True)
class DriftProcessSpec:
    """A Markov chain on ``{0} ∪ [1, inf)`` started at ``params.x0``.

    JUMP_TO_ZERO: from ``x > 0`` go to 0 with probability
    ``min(1, (log_gamma x + 1) delta)``, else stay.
    HALVING: with probability ``2 (log_gamma x + 1) delta`` go to ``x / 2``
    (to 0 once that falls below 1), else stay. That probability must not
    exceed 1 at ``x0``, or :class:`InvalidProcess` is raised.
    """

    kind: ProcessKind
    params: DriftParams
    _states: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = self.params.x0
        states = []
        while x > 0:
            states.append(x)
            if self.kind is ProcessKind.JUMP_TO_ZERO:
                break
            x = x / 2 if x / 2 >= 1 else 0
        object.__setattr__(self, "_states", tuple(states))
        if self.kind is ProcessKind.HALVING and states:
            raw = self._raw_probability(states[0])
            if raw > 1 + _REL_TOL:
                raise InvalidProcess(f"halving probability {float(raw):.4g} exceeds 1 at x0 = {float(states[0]):g}")

    def _raw_probability(self, x):
        factor = 2 if self.kind is ProcessKind.HALVING else 1
        return factor * (_log_base(self.params.gamma, x) + 1) * self.params.delta

    def move_probability(self, x):
        return min(1, self._raw_probability(x))

    def next_state(self, x):
        if self.kind is ProcessKind.JUMP_TO_ZERO:
            return 0
        return x / 2 if x / 2 >= 1 else 0

    @property
    def reachable_states(self) -> tuple:
        """Positive states in visiting order."""
        return self._states


@dataclass(frozen=True)
class ConditionCheck:
    x: Fraction
    decrease: float
    required: float
    holds: bool


def check_condition(spec: DriftProcessSpec) -> list[ConditionCheck]:
    """Closed-form expected one-step decrease against ``(log_gamma x + 1) delta x`` at every reachable state."""
    out = []
    for x in spec.reachable_states:
        dec = (x - spec.next_state(x)) * spec.move_probability(x)
        req = (_log_base(spec.params.gamma, x) + 1) * spec.params.delta * x
        if isinstance(dec, Fraction) and isinstance(req, Fraction):
            ok = dec >= req
        else:
            ok = float(dec) >= float(req) * (1 - _REL_TOL)
        out.append(ConditionCheck(x, float(dec), float(req), ok))
    return out


def expected_hitting_time(spec: DriftProcessSpec) -> float:
    """Exact mean of the first time at 0: each visited state is left after a geometric wait."""
    return float(sum(1 / spec.move_probability(x) for x in spec.reachable_states))


@dataclass(frozen=True)
class HittingTimeStats:
    mean: float
    stderr: float
    histogram: np.ndarray  # histogram[t] = number of runs with T = t
    runs: int


def simulate_hitting_time(spec: DriftProcessSpec, runs: int, rng: np.random.Generator | int) -> HittingTimeStats:
    """Run ``runs`` independent trajectories step by step until each hits 0."""
    if runs < 1:
        raise ValueError("runs must be positive")
    rng = np.random.default_rng(rng)
    probs = np.array([float(spec.move_probability(x)) for x in spec.reachable_states], dtype=float)
    level = np.zeros(runs, dtype=np.int64)  # index into reachable_states; len(probs) means absorbed
    times = np.zeros(runs, dtype=np.int64)
    alive = np.arange(runs)
    t = 0
    depth = len(probs)
    while alive.size and depth:
        t += 1
        moved = rng.random(alive.size) < probs[level[alive]]
        level[alive[moved]] += 1
        done = level[alive] >= depth
        times[alive[done]] = t
        alive = alive[~done]
    mean = float(times.mean())
    stderr = float(times.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return HittingTimeStats(mean, stderr, np.bincount(times), runs)


# --- grid validation -------------------------------------------------------------------

DEFAULT_GRID: tuple[DriftParams, ...] = tuple(
    DriftParams(gamma, delta, Fraction(gamma) ** k)
    for gamma in (2, 10)
    for delta in (Fraction(1, 5), Fraction(1, 20), Fraction(1, 100))
    for k in (1, 4, 16)
)


@dataclass(frozen=True)
class GridPointReport:
    kind: ProcessKind
    params: DriftParams
    admissible: bool
    condition_holds: bool
    failing_states: tuple
    bound: float
    mean: float | None = None
    stderr: float | None = None
    bound_holds: bool | None = None  # mean - 4 SE <= bound

    @property
    def passed(self) -> bool:
        return self.admissible and self.condition_holds and bool(self.bound_holds)


def validate_grid(
    grid: Iterable[DriftParams] = DEFAULT_GRID,
    runs: int = 10_000,
    seed: int = 0,
    kinds: Iterable[ProcessKind] = tuple(ProcessKind),
) -> list[GridPointReport]:
    """Condition check and Monte Carlo bound check for every (process, point) pair.

    An inadmissible pair (halving probability above 1) is reported with
    ``admissible=False`` and not simulated.
    """
    reports = []
    for i, params in enumerate(grid):
        bound = smdrift_bound(params)
        for j, kind in enumerate(kinds):
            try:
                spec = DriftProcessSpec(kind, params)
            except InvalidProcess:
                reports.append(GridPointReport(kind, params, False, False, (), bound))
                continue
            checks = check_condition(spec)
            failing = tuple(c.x for c in checks if not c.holds)
            stats = simulate_hitting_time(spec, runs, np.random.SeedSequence(seed, spawn_key=(i, j)))
            reports.append(
                GridPointReport(
                    kind,
                    params,
                    True,
                    not failing,
                    failing,
                    bound,
                    stats.mean,
                    stats.stderr,
                    stats.mean - 4 * stats.stderr <= bound,
                )
            )
    return reports
