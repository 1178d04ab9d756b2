"""Smallest leader attitude that drags a follower into action.

When the follower sits where the constant B vanishes, the threshold on the
leader has a closed form through the Lambert W function.  Compare it with a
plain bisection on M for a few decay rates.

    python demos/minimal_leader.py
"""
from dataclasses import replace

from planned_behavior.analytic import b0_alpha2, min_alpha1_bisect, min_alpha1_for_action_B0
from planned_behavior.sweep import FIG6_PARAMS

print(f"{'r':>5} {'alpha2':>10} {'closed form':>14} {'bisection':>14} {'diff':>9}")
for r in (0.3, 0.6, 0.86, 1.2, 2.0):
    p = replace(FIG6_PARAMS, r=r)
    a2 = b0_alpha2(p)
    closed = min_alpha1_for_action_B0(p)
    bis = min_alpha1_bisect(p, a2)
    print(f"{r:5.2f} {a2:10.6f} {closed:14.10f} {bis:14.10f} {closed - bis:9.1e}")
