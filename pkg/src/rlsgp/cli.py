"""Command-line entry point: ``rlsgp run | experiment | oracle | drift``.

Exit status is 0 on success, 1 on a domain error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import drift as drift_mod
from .engine import CompleteTable, Sampled, make_config, run
from .errors import RLSGPError
from .experiments import RQ, Ell, ExperimentConfig, emit_tsv, run_experiment
from .fitness import Estimate, Target
from .mutation import DeletionMode
from .oracle import ConcentrationSpec, concentration_check, is_trap, one_step_drift
from .tree import EMPTY, parse


class _Parser(argparse.ArgumentParser):
    """Reports unknown flags before missing ones.

    Required options are declared with ``required_=True``; they are checked
    after parsing so that a stray flag is named first.
    """

    def add_argument(self, *args, required_: bool = False, **kwargs):
        action = super().add_argument(*args, **kwargs)
        if required_:
            self.set_defaults(**{f"_required_{action.dest}": (self, action.option_strings[0])})
        return action

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _check_required(args: argparse.Namespace):
    missing: dict[_Parser, list[str]] = {}
    for key, value in sorted(vars(args).items()):
        if key.startswith("_required_"):
            owner, flag = value
            if getattr(args, key[len("_required_") :]) is None:
                missing.setdefault(owner, []).append(flag)
    for owner, flags in missing.items():
        owner.error(f"the following arguments are required: {', '.join(flags)}")


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _ell(text: str) -> Ell:
    try:
        return Ell(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _fitness_arg(text: str):
    if text == "ctt":
        return "ctt"
    if text.startswith("sample:"):
        try:
            s = int(text.split(":", 1)[1])
        except ValueError:
            s = 0
        if s >= 1:
            return s
    raise argparse.ArgumentTypeError("expected 'ctt' or 'sample:<s>' with s >= 1")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational such as 1/16, got {text!r}") from None


def _problem_flags(p: argparse.ArgumentParser, deletion_default: str = "subtree"):
    p.add_argument("--target", choices=["and", "or"], default="and")
    p.add_argument("--n", type=int, required_=True)
    p.add_argument("--ell", type=_ell, default=Ell("inf"), help="n, n+1, 2n, inf or an integer")
    p.add_argument("--deletion", choices=["leaf", "subtree"], default=deletion_default)
    p.add_argument("--negations", action="store_true", help="add negated literals to the leaf set")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rlsgp", description="RLS-GP on AND_n / OR_n: runs, experiments, exact oracles, drift checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="one seeded run")
    _problem_flags(p)
    p.add_argument("--fitness", type=_fitness_arg, default="ctt", help="ctt or sample:<s>")
    p.add_argument("--accept-threshold", type=int, default=0, help="A: stop once the sampled error is at most A")
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--initial-tree", default=None)
    p.add_argument("--seed", type=_seed, required_=True)

    p = sub.add_parser("experiment", help="a full experiment family, written as TSV")
    p.add_argument("rq", choices=[r.value for r in RQ])
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--out", type=Path, default=None, help="output directory (default results/<rq>)")
    p.add_argument("--seed", type=_seed, required_=True)
    p.add_argument("--parallelism", type=int, default=None, help="worker processes (default: all CPUs)")
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--n-values", type=_int_list, default=None)
    p.add_argument("--ell-values", default=None, help="comma-separated leaf limits")
    p.add_argument("--A-values", type=_int_list, default=None)
    p.add_argument("--s-values", type=_int_list, default=None)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("oracle", help="exact one-step checks")
    osub = p.add_subparsers(dest="oracle", required=True, parser_class=_Parser)
    for name in ("trap", "drift"):
        q = osub.add_parser(name)
        q.add_argument("--tree", required_=True)
        _problem_flags(q)
    q = osub.add_parser("concentration")
    q.add_argument("--s", type=int, required_=True)
    q.add_argument("--G", type=_rational, required_=True)
    q.add_argument("--n", type=int, required_=True)
    q.add_argument("--c", type=_rational, required_=True)

    p = sub.add_parser("drift", help="super-multiplicative drift bounds and validation")
    dsub = p.add_subparsers(dest="drift", required=True, parser_class=_Parser)
    q = dsub.add_parser("validate")
    q.add_argument("--grid", choices=["default"], default="default")
    q.add_argument("--runs", type=int, default=10_000)
    q.add_argument("--seed", type=_seed, required_=True)
    q.add_argument("--strict", action="store_true", help="exit 1 if any grid point fails")
    q = dsub.add_parser("bound")
    q.add_argument("--gamma", type=_rational, required_=True)
    q.add_argument("--delta", type=_rational, required_=True)
    q.add_argument("--x0", type=_rational, required_=True)
    q.add_argument("--xmin", type=_rational, default=Fraction(1))
    return parser


# --- commands ---------------------------------------------------------------------------


def _config_from(args, fitness=CompleteTable(), seed: int = 0, max_iterations: int = 10_000):
    initial = getattr(args, "initial_tree", None)
    return make_config(
        args.n,
        args.ell.resolve(args.n),
        target=Target(args.target),
        negations=args.negations,
        deletion=DeletionMode.LEAF_ONLY if args.deletion == "leaf" else DeletionMode.SUBTREE,
        fitness=fitness,
        max_iterations=max_iterations,
        seed=seed,
        initial_tree=EMPTY if initial is None else parse(initial, args.n),
    )


def _cmd_run(args, out) -> int:
    fitness = CompleteTable() if args.fitness == "ctt" else Sampled(args.fitness, args.accept_threshold)
    res = run(_config_from(args, fitness, args.seed, args.max_iterations))
    gen = res.final_generalisation_error
    if isinstance(gen, Estimate):
        gen_text = f"~{gen.value:.6g} (Monte Carlo, stderr {gen.stderr:.2g}, {gen.rows} rows)"
    else:
        gen_text = f"{gen} ({float(gen):.6g})"
    print(f"outcome\t{res.outcome.value}", file=out)
    print(f"iterations\t{res.iterations}", file=out)
    print(f"tree\t{res.final_tree}", file=out)
    print(f"leaf_count\t{res.leaf_count}", file=out)
    print(f"generalisation_error\t{gen_text}", file=out)
    print(f"ors_inserted\t{res.ors_accepted_during_run}", file=out)
    print(f"ors_final\t{res.ors_in_final_tree}", file=out)
    return 0


def _cmd_experiment(args, out) -> int:
    overrides = {}
    if args.n_values:
        overrides["n_values"] = args.n_values
    if args.ell_values:
        overrides["ell_policy"] = tuple(Ell(v) for v in args.ell_values.split(","))
    if args.A_values:
        overrides["A_values"] = args.A_values
    if args.s_values:
        overrides["s_values"] = args.s_values
    cfg = ExperimentConfig.default(
        args.rq, master_seed=args.seed, runs_per_cell=args.runs, max_iterations=args.max_iterations, **overrides
    )
    done = [0]
    total = len(cfg.cells()) * cfg.runs_per_cell

    def progress(key, k):
        done[0] += k
        if not args.quiet:
            print(f"\r{done[0]}/{total} runs", end="", file=sys.stderr, flush=True)

    stats = run_experiment(cfg, parallelism=args.parallelism, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
    dest = args.out if args.out is not None else Path("results") / args.rq
    for path in emit_tsv(stats, dest, cfg):
        print(path, file=out)
    return 0


def _cmd_oracle(args, out) -> int:
    if args.oracle == "concentration":
        r = concentration_check(ConcentrationSpec(args.s, args.G, args.n, args.c))
        print(f"mean\t{r.mean}", file=out)
        print(f"upper_tail\tPr[X >= {r.upper_threshold}] = {float(r.upper_tail):.6g} <= {float(r.upper_bound):.6g}\t{r.upper_ok}", file=out)
        print(f"lower_tail\tPr[X <= {r.lower_threshold}] = {float(r.lower_tail):.6g} <= {float(r.lower_bound):.6g}\t{r.lower_ok}", file=out)
        print(f"deviation_probability\t{float(r.deviation_probability):.6g}", file=out)
        print(f"passed={str(r.passed).lower()}", file=out)
        return 0
    cfg = _config_from(args)
    tree = parse(args.tree, args.n)
    if args.oracle == "trap":
        r = is_trap(tree, cfg)
        print(f"is_trap={str(r.is_trap).lower()}", file=out)
        print(f"fitness\t{r.fitness}", file=out)
        print(f"accepted_outcomes\t{len(r.accepted_outcomes)}", file=out)
        print(f"all_accepted_semantically_identical\t{r.all_accepted_semantically_identical}", file=out)
        print(f"all_accepted_same_size\t{r.all_accepted_same_size}", file=out)
    else:
        r = one_step_drift(tree, cfg)
        print(f"fitness\t{r.fitness}", file=out)
        print(f"exact_drift\t{r.exact_drift} ({float(r.exact_drift):.6g})", file=out)
        if r.lower_bound is not None:
            print(f"lower_bound\t{r.lower_bound}\t{r.exact_drift >= r.lower_bound}", file=out)
    return 0


def _cmd_drift(args, out) -> int:
    if args.drift == "bound":
        params = drift_mod.DriftParams(args.gamma, args.delta, args.x0)
        print(f"smdrift_bound\t{drift_mod.smdrift_bound(params):.6f}", file=out)
        if args.x0 >= args.xmin >= 1:
            print(f"multiplicative_bound\t{drift_mod.multiplicative_drift_bound(args.delta, args.x0, args.xmin):.6f}", file=out)
        return 0
    reports = drift_mod.validate_grid(runs=args.runs, seed=args.seed)
    print("process\tgamma\tdelta\tx0\tadmissible\tcondition\tmean\tstderr\tbound\tbound_ok", file=out)
    for r in reports:
        p = r.params
        x0 = f"{p.gamma}^{round(math.log(p.x0) / math.log(p.gamma))}"
        mean = "-" if r.mean is None else f"{r.mean:.3f}"
        se = "-" if r.stderr is None else f"{r.stderr:.3f}"
        print(
            f"{r.kind.value}\t{p.gamma}\t{p.delta}\t{x0}\t{r.admissible}\t{r.condition_holds}\t{mean}\t{se}\t{r.bound:.3f}\t{r.bound_holds}",
            file=out,
        )
    failed = sum(not r.passed for r in reports)
    print(f"passed {len(reports) - failed}/{len(reports)}", file=out)
    return 1 if args.strict and failed else 0


def main(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_required(args)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = {"run": _cmd_run, "experiment": _cmd_experiment, "oracle": _cmd_oracle, "drift": _cmd_drift}
    try:
        return handlers[args.command](args, out)
    except (RLSGPError, ValueError) as e:
        print(f"rlsgp: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
