"""Partition of the unit square of attitudes into the three regimes.

Runs the analytic and simulated classifications side by side on a coarse
grid, prints the grid as characters (. none, p partial, F full, ? undecided)
and reports how often the two agree.

    python demos/fig6_partition.py [steps]
"""
import sys

from planned_behavior.sweep import FIG6_PARAMS, SweepSpec, run_sweep

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 25
res = run_sweep(SweepSpec(FIG6_PARAMS, ((0.0, 1.0, steps), (0.0, 1.0, steps)), "both"))

glyph = {"NoAction": ".", "PartialAction": "p", "FullAction": "F", "Undetermined": "?"}
tags = res.tags("empirical")
print("alpha2 ^ (rows), alpha1 > (columns)")
for j in reversed(range(steps)):
    print("  " + "".join(glyph.get(tags[i, j], "x") for i in range(steps)))

print("\ncounts:", res.counts("empirical"))
print(f"agreement {res.agreement_rate():.4f}, "
      f"away from the boundaries {res.agreement_rate(True):.4f}")
print("M = 0 curve (first points):")
for a1, a2 in res.boundary_M0[:5]:
    print(f"  alpha1={a1:.4f}  alpha2={a2:.6f}")
