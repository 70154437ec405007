"""How the training-set size and acceptance threshold shape sampled runs at n = 50.

A small version of the RQ4 sweep: for each s, 100 runs per threshold.
Run with ``python demos/sampled_sweep.py``.
"""

from rlsgp import RQ, ExperimentConfig, run_experiment

cfg = ExperimentConfig.default(RQ.RQ4, master_seed=3, runs_per_cell=100, s_values=(16, 256, 4096), A_values=(0, 32))
stats = run_experiment(cfg)

print("A\ts\tmean_T\tmean_S\tmean_gen_error")
for key, cell in stats.items():
    print(f"{key.A}\t{key.s}\t{cell.mean_T:.1f}\t{cell.mean_S:.1f}\t{cell.mean_generalisation_error:.5f}")
