"""Three individuals: how many end up acting?

No closed-form classification exists beyond two individuals, so this scans
a coarse cube of attitudes by simulation and tallies the number of actors.

    python demos/three_individuals.py [steps]
"""
import sys

from planned_behavior.sweep import FIG6_PARAMS, SweepSpec, run_sweep

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 6
params = FIG6_PARAMS.with_n(3)
res = run_sweep(SweepSpec(params, ((0.0, 1.0, steps),) * 3, "simulated"))
print(f"{steps ** 3} cells")
for k, v in res.actor_counts().items():
    print(f"  {k} actors: {v}")
print("undecided:", res.counts().get("Undetermined", 0), " errors:", len(res.errors))
