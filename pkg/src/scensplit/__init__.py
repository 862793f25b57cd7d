"""Scenario-decomposition solvers for multi-stage stochastic equilibrium
problems, with a block-activated splitting method, a progressive-hedging
style baseline, and a conditional value-at-risk pipeline."""

from . import cli, cvar, errors, operators, oracle, policy, solver, tree
from .cvar import CvarProblem, CvarSolution, augment, cvar_value, solve_cvar
from .operators import (
    Affine,
    Ball,
    Box,
    Coordinates,
    CvarAugmented,
    DiagonalAffine,
    Full,
    GradSeparableQuadratic,
    Halfspace,
    Hyperplane,
    RealCross,
    SeparableQuadratic,
    WholeSpace,
    Zero,
    composite_resolvent,
    project_constraint,
    project_subspace,
    prox_cvar_augmented,
    prox_max_nonneg,
    resolvent,
    validate_range_condition,
)
from .solver import (
    FullActivation,
    Problem,
    RoundRobin,
    SeededRandom,
    Solution,
    SolverConfig,
    SolveStatus,
    kkt_residual,
    make_problem,
    progressive_hedging_solve,
    solve,
    solve_reduced,
)
from .tree import Scenario, ScenarioTree, build_tree, equivalence_classes

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "Ball",
    "Box",
    "Coordinates",
    "CvarAugmented",
    "CvarProblem",
    "CvarSolution",
    "DiagonalAffine",
    "Full",
    "FullActivation",
    "GradSeparableQuadratic",
    "Halfspace",
    "Hyperplane",
    "Problem",
    "RealCross",
    "RoundRobin",
    "Scenario",
    "ScenarioTree",
    "SeededRandom",
    "SeparableQuadratic",
    "Solution",
    "SolverConfig",
    "SolveStatus",
    "WholeSpace",
    "Zero",
    "augment",
    "build_tree",
    "cli",
    "composite_resolvent",
    "cvar",
    "cvar_value",
    "equivalence_classes",
    "errors",
    "kkt_residual",
    "make_problem",
    "operators",
    "oracle",
    "policy",
    "progressive_hedging_solve",
    "project_constraint",
    "project_subspace",
    "prox_cvar_augmented",
    "prox_max_nonneg",
    "resolvent",
    "solve",
    "solve_cvar",
    "solve_reduced",
    "solver",
    "tree",
    "validate_range_condition",
]
