"""Risk-averse planning: sweep the tail level and watch the plan hedge.

Two scenarios, one shared production decision.  The ordinary scenario
prefers a small output, the rare bad scenario a large one.  As the tail
level rises the plan stops averaging and starts protecting the bad case.
"""
import numpy as np

from scensplit import CvarProblem, SeparableQuadratic, SolverConfig, WholeSpace
from scensplit import build_tree, cvar_value, solve_cvar

tree = build_tree([((0,), 0.85), ((1,), 0.15)], stage_dims=[1])
costs = (
    SeparableQuadratic(q=[1.0], c=[0.2]),  # ordinary demand
    SeparableQuadratic(q=[2.0], c=[1.4]),  # rare demand spike
)
constraints = (WholeSpace(), WholeSpace())

print(f"{'alpha':>6s} {'plan':>9s} {'threshold':>10s} {'tail cost':>10s}")
for alpha in (0.01, 0.25, 0.5, 0.75, 0.9, 0.99):
    cp = CvarProblem(tree, alpha, costs, constraints)
    sol = solve_cvar(cp, SolverConfig(tol=1e-10))
    print(
        f"{alpha:6.2f} {sol.x_bar[0, 0]:9.5f} {sol.y_bar:10.5f} {sol.objective:10.5f}"
    )

# the tail functional itself, on a fixed loss vector: pinned between the
# mean and the maximum, and monotone in the tail level
losses = np.array([1.0, 3.0])
mean = 0.85 * losses[0] + 0.15 * losses[1]
print(f"\nfixed losses {losses.tolist()}: mean {mean:.3f}, max {losses.max():.1f}")
for alpha in (0.05, 0.5, 0.85, 0.99):
    print(f"  tail level {alpha:4.2f}: {cvar_value(tree, alpha, losses):.4f}")
