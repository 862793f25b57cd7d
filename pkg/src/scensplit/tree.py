"""Finite scenario trees and their information structure.

A scenario is a full sequence of per-stage observation labels together with
a probability.  Two scenarios are indistinguishable at decision stage k when
their labels agree through stage k-1, so the stage-k decision must be shared
across each group of indistinguishable scenarios.  The resulting per-stage
partitions refine each other as k grows and drive every nonanticipativity
computation in this package.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadProbabilityMass,
    DuplicateScenario,
    EmptyTree,
    NonPositiveProbability,
    StageOutOfRange,
    ValidationError,
)

# total probability mass must match 1 within this tolerance
MASS_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    """One realization of the stage-wise observation process."""

    index: int
    labels: tuple
    probability: float


@dataclass(frozen=True)
class ScenarioTree:
    """Immutable scenario tree over a fixed set of decision stages.

    ``classes[k-1]`` holds the stage-k information partition as a tuple of
    index tuples, ordered by smallest member, members ascending.  The
    ``class_index`` / ``class_mass`` arrays are the same partitions in a
    form convenient for vectorized averaging.
    """

    scenarios: tuple[Scenario, ...]
    stage_dims: tuple[int, ...]
    classes: tuple[tuple[tuple[int, ...], ...], ...] = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    stage_slices: tuple[slice, ...] = field(repr=False)
    class_index: tuple[np.ndarray, ...] = field(repr=False)
    class_mass: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def num_scenarios(self) -> int:
        return len(self.scenarios)

    @property
    def num_stages(self) -> int:
        return len(self.stage_dims)

    @property
    def total_dim(self) -> int:
        return sum(self.stage_dims)


def build_tree(scenarios, stage_dims) -> ScenarioTree:
    """Build an immutable tree from ``(labels, probability)`` pairs.

    ``stage_dims`` fixes the per-stage decision dimensions.  Label sequences
    must be pairwise distinct, probabilities must be positive and sum to 1
    within ``MASS_TOL``.
    """
    stage_dims = tuple(int(d) for d in stage_dims)
    if not stage_dims or any(d < 1 for d in stage_dims):
        raise ValidationError("stage_dims must be a nonempty sequence of dims >= 1")
    n_stages = len(stage_dims)

    items = list(scenarios)
    if not items:
        raise EmptyTree("a scenario tree needs at least one scenario")

    built = []
    for i, (labels, prob) in enumerate(items):
        labels = tuple(labels)
        if len(labels) != n_stages:
            raise ValidationError(
                f"scenario {i} has {len(labels)} labels, expected {n_stages}"
            )
        prob = float(prob)
        if prob <= 0.0:
            raise NonPositiveProbability(f"scenario {i} has probability {prob}")
        built.append(Scenario(index=i, labels=labels, probability=prob))

    seen = {}
    for s in built:
        if s.labels in seen:
            raise DuplicateScenario(
                f"scenarios {seen[s.labels]} and {s.index} share labels {s.labels}"
            )
        seen[s.labels] = s.index

    probs = np.array([s.probability for s in built], dtype=float)
    mass = float(probs.sum())
    if abs(mass - 1.0) > MASS_TOL:
        raise BadProbabilityMass(f"probabilities sum to {mass!r}, expected 1")

    # stage-k classes group scenarios by their label prefix of length k-1;
    # first-seen order equals order by smallest member
    classes = []
    class_index = []
    class_mass = []
    for k in range(1, n_stages + 1):
        groups: dict[tuple, list[int]] = {}
        for s in built:
            groups.setdefault(s.labels[: k - 1], []).append(s.index)
        parts = tuple(tuple(g) for g in groups.values())
        classes.append(parts)
        idx = np.empty(len(built), dtype=int)
        for j, members in enumerate(parts):
            for m in members:
                idx[m] = j
        class_index.append(_frozen(idx))
        class_mass.append(_frozen(np.array([probs[list(m)].sum() for m in parts])))

    offsets = np.concatenate(([0], np.cumsum(stage_dims)))
    slices = tuple(slice(int(offsets[k]), int(offsets[k + 1])) for k in range(n_stages))

    return ScenarioTree(
        scenarios=tuple(built),
        stage_dims=stage_dims,
        classes=tuple(classes),
        probabilities=_frozen(probs),
        stage_slices=slices,
        class_index=tuple(class_index),
        class_mass=tuple(class_mass),
    )


def equivalence_classes(tree: ScenarioTree, stage: int):
    """Return the information partition at a 1-based decision stage."""
    if not 1 <= stage <= tree.num_stages:
        raise StageOutOfRange(f"stage {stage} outside 1..{tree.num_stages}")
    return tree.classes[stage - 1]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr
