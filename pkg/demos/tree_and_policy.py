"""Build a three-stage scenario tree and look at the information structure.

Scenarios that share a history prefix must act identically until they
separate; the averaging projector enforces exactly that, stage by stage.
"""
import numpy as np

from scensplit import build_tree, equivalence_classes, policy

# six scenarios on a binary-then-ternary event tree, one number per stage
scenarios = [
    ((0, 0, 0), 0.20),
    ((0, 0, 1), 0.10),
    ((0, 1, 0), 0.25),
    ((1, 0, 0), 0.15),
    ((1, 0, 1), 0.10),
    ((1, 1, 0), 0.20),
]
tree = build_tree(scenarios, stage_dims=[2, 1, 1])

print(f"scenarios: {tree.num_scenarios}")
print(f"stage dims: {tree.stage_dims}, total dim per scenario: {tree.total_dim}")
for k in range(1, tree.num_stages + 1):
    classes = equivalence_classes(tree, k)
    print(f"stage {k}: {len(classes)} information classes: {classes}")

rng = np.random.default_rng(7)
x = rng.normal(size=(tree.num_scenarios, tree.total_dim))

# the projection averages within each class, weighted by probability
px = policy.project_nonanticipative(tree, x)
residual = policy.project_nonanticipative_complement(tree, x)

print("\nstage-1 columns after projection (identical across all scenarios):")
print(px[:, :2])
print("\nstage-2 column after projection (constant within each stage-2 class):")
print(px[:, 2])

# the two pieces are orthogonal in the probability-weighted inner product
cross = policy.inner(tree, px, residual)
pythagoras = (
    policy.norm(tree, x) ** 2
    - policy.norm(tree, px) ** 2
    - policy.norm(tree, residual) ** 2
)
print(f"\n<Px, x - Px> = {cross:.2e}")
print(f"norm split defect = {pythagoras:.2e}")
