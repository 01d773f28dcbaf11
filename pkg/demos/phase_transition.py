"""A small Dirac phase transition: success ratio over sparsity and samples.

Every trial is seeded from its grid position, so the same grid comes out
regardless of thread count.
"""
import numpy as np

from frilift.bench import ExperimentConfig, run_phase_transition
from frilift.solvers import SolverParams

config = ExperimentConfig(
    "diracs", n=64, d=33, s_range=[1, 3, 5, 7], m_range=[8, 16, 24, 32],
    trials=10, solver=SolverParams(max_iter=300),
)
result = run_phase_transition(config, workers=2)

print("s \\ m " + "".join(f"{m:>6d}" for m in result.m_values))
for s, row in zip(result.s_values, result.grid):
    print(f"{s:5d} " + "".join(f"{v:6.1f}" for v in row))
print("failed trials with errors:", sum(bool(r.error) for r in result.records))
print("mean NMSE of successes:", np.mean([r.nmse for r in result.records if r.success]))
