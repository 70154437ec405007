"""A duplicated branch traps leaf-only deletion but not subtree deletion.

Run with ``python demos/trap_escape.py``.
"""

from rlsgp import DeletionMode, is_trap, make_config, parse, run

TREE = parse("(or (and x1 x2) (and x1 x2))")

for mode in DeletionMode:
    cfg = make_config(3, 4, deletion=mode, initial_tree=TREE, seed=1)
    report = is_trap(TREE, cfg)
    result = run(cfg)
    print(f"{mode.value:8s} trap={report.is_trap!s:5s} outcome={result.outcome.value:18s} "
          f"iterations={result.iterations:5d} final={result.final_tree}")
