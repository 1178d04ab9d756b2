"""Walk through the two-individual regimes.

For one attitude pair from each row of the classification table this prints
the analytic verdict, the simulated verdict and the first few action times.

    python demos/two_body_regimes.py
"""
from planned_behavior import GlobalParams, IndividualConfig
from planned_behavior.analytic import action_bounds, classify_two
from planned_behavior.simulate import default_config, simulate_and_classify

params = GlobalParams(sigma_a=1.0, sigma_s=0.5, sigma_c=0.5, mu_s=0.5, mu_c=0.05,
                      r=0.86, tau=0.8)
print(f"margin line at alpha = {params.alpha_boundary}")

cases = [
    ("both margins negative", 0.20, 0.10),
    ("leader exactly on the line", 0.25, 0.10),
    ("both margins positive", 0.60, 0.40),
    ("follower exactly on the line", 0.60, 0.25),
    ("mixed, follower pulled up", 0.80, 0.22),
    ("mixed, follower left behind", 0.60, 0.10),
]

for label, a1, a2 in cases:
    theory = classify_two(params, a1, a2)
    sim, traj = simulate_and_classify(
        params, [IndividualConfig(a1), IndividualConfig(a2)], default_config(params, [a1, a2]))
    M = "" if theory.M is None else f"  M={theory.M:+.4f}"
    print(f"\n{label}: alpha = ({a1}, {a2}){M}")
    print(f"  analytic  {theory.tag:14s} actors {[i + 1 for i in theory.actors]}")
    print(f"  simulated {sim.tag:14s} actors {[i + 1 for i in sim.actors]}")
    for i in range(2):
        ts = traj.event_times(i)[:4]
        if len(ts):
            print(f"  individual {i + 1} acts at " + ", ".join(f"{t:.2f}" for t in ts))
    if theory.M is not None and theory.M > 0:
        b = action_bounds(params, a1, a2)
        print(f"  follower must act within {b.m + b.n_after} leader periods "
              f"(t <= {b.horizon:.1f}); it acted at {traj.first_action(1):.1f}")
