"""Slow, independent reference solvers used to validate the fast paths.

Everything here is brute force on purpose: dense grids with refinement for
proximity operators, projected gradient descent on an explicit
class-representative parametrization for quadratic box instances, and grid
search over at most three free coordinates for tiny risk problems.  These
routines share problem data with the main solvers but none of their
computational code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cvar import CvarProblem, cvar_value
from .errors import (
    BadGrid,
    NonPositiveGamma,
    TooManyFreeCoordinates,
    UnsupportedInstance,
)
from .operators import (
    Affine,
    Ball,
    Box,
    GradSeparableQuadratic,
    Halfspace,
    Hyperplane,
    RealCross,
    SeparableQuadratic,
    WholeSpace,
)
from .solver import Problem
from .tree import ScenarioTree


@dataclass(frozen=True)
class GridSpec:
    """Search box, points per axis, and number of 10x refinement rounds."""

    lower: np.ndarray
    upper: np.ndarray
    points: int = 2001
    rounds: int = 3

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise BadGrid(f"bounds shapes {lo.shape} / {hi.shape} do not line up")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise BadGrid("grid bounds must be finite")
        if np.any(lo >= hi):
            raise BadGrid("grid needs lower < upper on every axis")
        if self.points < 3:
            raise BadGrid(f"need at least 3 points per axis, got {self.points}")
        if self.rounds < 0:
            raise BadGrid(f"rounds must be nonnegative, got {self.rounds}")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def final_pitch(self) -> np.ndarray:
        """Grid spacing per axis after the last refinement round."""
        return (self.upper - self.lower) / (self.points - 1) / 10.0 ** self.rounds


def _grid_search(fun, spec: GridSpec, extra=None):
    """Minimize fun over the box by refined dense evaluation.

    ``fun`` maps an (M, dim) array to M values.  Each round shrinks the box
    tenfold around the incumbent (clipped to the original bounds), so the
    incumbent value never increases across rounds.  ``extra``, when given,
    maps the current window (lo, hi) to additional candidate rows inside it;
    callers use it to sample kink curves that a rectangular mesh straddles.
    """
    lo = spec.lower.copy()
    hi = spec.upper.copy()
    best_point = None
    best_value = np.inf
    for _ in range(spec.rounds + 1):
        axes = [np.linspace(lo[j], hi[j], spec.points) for j in range(spec.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        if extra is not None:
            more = np.asarray(extra(lo, hi), dtype=float).reshape(-1, spec.dim)
            if more.size:
                pts = np.concatenate([pts, more], axis=0)
        vals = np.asarray(fun(pts), dtype=float)
        at = int(np.argmin(vals))
        if vals[at] < best_value:
            best_value = float(vals[at])
            best_point = pts[at].copy()
        if best_point is None:
            raise UnsupportedInstance("objective is infinite on the whole grid")
        width = (hi - lo) / 10.0
        lo = np.maximum(spec.lower, best_point - width / 2.0)
        hi = np.minimum(spec.upper, best_point + width / 2.0)
    return best_point, best_value


def _eval_cost_many(f, pts: np.ndarray) -> np.ndarray:
    # own evaluation of the catalog costs, vectorized over rows
    if isinstance(f, Affine):
        return pts @ f.c + f.r
    if isinstance(f, SeparableQuadratic):
        return 0.5 * ((pts - f.c) ** 2) @ f.q + f.r
    raise UnsupportedInstance(f"no oracle evaluation for cost {type(f).__name__}")


def oracle_prox_grid(f, gamma: float, x: float, grid: GridSpec, positive_part: bool = True) -> float:
    """Grid minimizer of gamma*max{f,0} + 0.5(.-x)^2 (or gamma*f + ...)."""
    if gamma <= 0:
        raise NonPositiveGamma(f"prox parameter {gamma} must be positive")
    if f.dim != 1 or grid.dim != 1:
        raise UnsupportedInstance("the prox oracle handles one-dimensional costs")
    x = float(x)

    def objective(pts):
        fv = _eval_cost_many(f, pts)
        penal = np.maximum(fv, 0.0) if positive_part else fv
        return gamma * penal + 0.5 * (pts[:, 0] - x) ** 2

    point, _ = _grid_search(objective, grid)
    return float(point[0])


def oracle_prox_cvar_grid(f, alpha: float, gamma: float, y: float, x: float, grid: GridSpec):
    """Grid minimizer over (threshold, decision) of the augmented prox objective."""
    if gamma <= 0:
        raise NonPositiveGamma(f"prox parameter {gamma} must be positive")
    if not 0.0 < alpha < 1.0:
        raise UnsupportedInstance(f"alpha must lie in (0, 1), got {alpha}")
    if f.dim != 1 or grid.dim != 2:
        raise UnsupportedInstance("the augmented prox oracle is two-dimensional")
    y = float(y)
    x = float(x)
    scale = 1.0 / (1.0 - alpha)

    def objective(pts):
        thr = pts[:, 0]
        dec = pts[:, 1:2]
        fv = _eval_cost_many(f, dec)
        risk = thr + scale * np.maximum(fv - thr, 0.0)
        return gamma * risk + 0.5 * ((thr - y) ** 2 + (dec[:, 0] - x) ** 2)

    def kink_candidates(lo, hi):
        # minimizers frequently sit on the curve f(dec) = thr, which the
        # rectangular mesh only straddles; sample the curve itself so the
        # search keeps full pitch resolution along it
        dec = np.linspace(lo[1], hi[1], grid.points)
        thr = _eval_cost_many(f, dec[:, None])
        keep = (thr >= lo[0]) & (thr <= hi[0])
        return np.stack([thr[keep], dec[keep]], axis=-1)

    point, _ = _grid_search(objective, grid, extra=kink_candidates)
    return float(point[0]), float(point[1])


# ---------------------------------------------------------------------------
# instance-level oracles on the class-representative parametrization
# ---------------------------------------------------------------------------

def _free_coordinates(tree: ScenarioTree):
    """One entry per (stage class, stage column): (member indices, column)."""
    out = []
    for k, block in enumerate(tree.stage_slices):
        for members in tree.classes[k]:
            for col in range(block.start, block.stop):
                out.append((np.asarray(members, dtype=int), col))
    return out


def _expand(tree: ScenarioTree, fcs, z: np.ndarray) -> np.ndarray:
    x = np.empty((tree.num_scenarios, tree.total_dim))
    for value, (members, col) in zip(z, fcs):
        x[members, col] = value
    return x


def oracle_solve_quadratic_box(problem: Problem) -> np.ndarray:
    """Projected gradient reference for quadratic costs over boxes.

    Works on the free coordinates directly, so nonanticipativity holds by
    construction; the box of a free coordinate is the intersection of its
    members' boxes.  Step 1/L with L the largest aggregated curvature.
    """
    tree = problem.tree
    for op in problem.operators:
        if not isinstance(op, GradSeparableQuadratic):
            raise UnsupportedInstance(f"operator {type(op).__name__} not quadratic")
    for cs in problem.constraints:
        if not isinstance(cs, Box):
            raise UnsupportedInstance(f"constraint {type(cs).__name__} not a box")
    probs = tree.probabilities
    fcs = _free_coordinates(tree)
    m = len(fcs)
    lam = np.zeros(m)
    lin = np.zeros(m)
    lo = np.empty(m)
    hi = np.empty(m)
    for j, (members, col) in enumerate(fcs):
        w = probs[members]
        q = np.array([problem.operators[i].q[col] for i in members])
        c = np.array([problem.operators[i].c[col] for i in members])
        lam[j] = float(w @ q)
        lin[j] = float(w @ (q * c))
        lo[j] = max(problem.constraints[i].lo[col] for i in members)
        hi[j] = min(problem.constraints[i].hi[col] for i in members)
    if np.any(lo > hi):
        raise UnsupportedInstance("a free coordinate has empty box intersection")

    big = float(lam.max(initial=0.0))
    z = np.clip(np.zeros(m), lo, hi)
    if big > 0.0:
        step = 1.0 / big
        for _ in range(1000000):
            grad = lam * z - lin
            z_new = np.clip(z - step * grad, lo, hi)
            moved = float(np.linalg.norm(z - z_new)) * big
            z = z_new
            if moved <= 1e-12:
                break
    return _expand(tree, fcs, z)


def _feasible(cs, x: np.ndarray) -> bool:
    # own membership checks, used only to mask grid points
    if isinstance(cs, WholeSpace):
        return True
    if isinstance(cs, Box):
        return bool(np.all(x >= cs.lo) and np.all(x <= cs.hi))
    if isinstance(cs, Ball):
        return float(np.linalg.norm(x - cs.center)) <= cs.radius + 1e-12
    if isinstance(cs, Halfspace):
        return float(cs.normal @ x) <= cs.offset + 1e-12
    if isinstance(cs, Hyperplane):
        return abs(float(cs.normal @ x) - cs.offset) <= 1e-9 * (1.0 + abs(cs.offset))
    if isinstance(cs, RealCross):
        return _feasible(cs.base, x[1:])
    raise UnsupportedInstance(f"no oracle feasibility test for {type(cs).__name__}")


def oracle_cvar_small(cp: CvarProblem, grid: GridSpec):
    """Grid search over the free coordinates of a tiny risk problem.

    Returns ``(policy, value)``.  Limited to three free coordinates; the
    objective at each candidate is the exact tail risk of the induced
    per-scenario costs, infinity outside the constraints.
    """
    tree = cp.tree
    fcs = _free_coordinates(tree)
    if len(fcs) > 3:
        raise TooManyFreeCoordinates(
            f"{len(fcs)} free coordinates; the grid oracle handles at most 3"
        )
    if grid.dim != len(fcs):
        raise BadGrid(f"grid has {grid.dim} axes, instance has {len(fcs)} free coordinates")

    def objective(pts):
        vals = np.empty(pts.shape[0])
        for r in range(pts.shape[0]):
            x = _expand(tree, fcs, pts[r])
            ok = all(_feasible(cs, x[i]) for i, cs in enumerate(cp.constraints))
            if not ok:
                vals[r] = np.inf
                continue
            losses = [
                float(_eval_cost_many(f, x[i : i + 1])[0]) for i, f in enumerate(cp.costs)
            ]
            vals[r] = cvar_value(tree, cp.alpha, np.asarray(losses))
        return vals

    point, value = _grid_search(objective, grid)
    return _expand(tree, fcs, point), float(value)
