import numpy as np
import pytest
from numpy.testing import assert_allclose

from scensplit.cvar import CvarProblem, cvar_value
from scensplit.errors import (
    BadGrid,
    NonPositiveGamma,
    TooManyFreeCoordinates,
    UnsupportedInstance,
)
from scensplit.operators import (
    Affine,
    Box,
    DiagonalAffine,
    Full,
    GradSeparableQuadratic,
    SeparableQuadratic,
    WholeSpace,
    cost_prox,
    cost_value,
)
from scensplit.oracle import (
    GridSpec,
    oracle_cvar_small,
    oracle_prox_cvar_grid,
    oracle_prox_grid,
    oracle_solve_quadratic_box,
)
from scensplit.solver import Problem
from scensplit.tree import build_tree


def line_grid(width=5.0, points=2001, rounds=3):
    return GridSpec(lower=[-width], upper=[width], points=points, rounds=rounds)


# --- grid specification ---

def test_grid_spec_validation():
    spec = GridSpec(lower=[-1.0], upper=[1.0], points=3, rounds=2)
    assert spec.dim == 1
    assert_allclose(spec.final_pitch, [0.01])
    with pytest.raises(BadGrid):
        GridSpec(lower=[1.0], upper=[1.0])
    with pytest.raises(BadGrid):
        GridSpec(lower=[0.0, 0.0], upper=[1.0])
    with pytest.raises(BadGrid):
        GridSpec(lower=[-np.inf], upper=[1.0])
    with pytest.raises(BadGrid):
        GridSpec(lower=[0.0], upper=[1.0], points=2)
    with pytest.raises(BadGrid):
        GridSpec(lower=[0.0], upper=[1.0], rounds=-1)


# --- scalar prox oracle ---

def test_oracle_prox_plain_matches_closed_form():
    rng = np.random.default_rng(51)
    grid = line_grid()
    tol = 2.0 * float(grid.final_pitch[0])
    for _ in range(10):
        f = SeparableQuadratic(
            q=[float(rng.uniform(0.2, 2.0))], c=[float(rng.uniform(-1, 1))]
        )
        gamma = float(rng.uniform(0.2, 2.0))
        x = float(rng.uniform(-2, 2))
        got = oracle_prox_grid(f, gamma, x, grid, positive_part=False)
        want = float(cost_prox(f, gamma, np.array([x]))[0])
        assert got == pytest.approx(want, abs=tol)


def test_oracle_prox_positive_part_known_values():
    grid = line_grid()
    tol = 2.0 * float(grid.final_pitch[0])
    f = Affine(c=[1.0], r=-1.0)
    assert oracle_prox_grid(f, 1.0, 0.5, grid) == pytest.approx(0.5, abs=tol)
    assert oracle_prox_grid(f, 1.0, 3.0, grid) == pytest.approx(2.0, abs=tol)
    assert oracle_prox_grid(f, 1.0, 1.5, grid) == pytest.approx(1.0, abs=tol)
    bowl = SeparableQuadratic(q=[2.0], c=[0.0], r=-1.0)
    assert oracle_prox_grid(bowl, 10.0, 1.5, grid) == pytest.approx(1.0, abs=tol)


def test_oracle_prox_refinement_never_hurts():
    f = SeparableQuadratic(q=[1.0], c=[0.7], r=-0.2)

    def objective(p):
        return max(cost_value(f, [p]), 0.0) + 0.5 * (p - 2.3) ** 2

    coarse = oracle_prox_grid(f, 1.0, 2.3, line_grid(points=101, rounds=0))
    fine = oracle_prox_grid(f, 1.0, 2.3, line_grid(points=101, rounds=3))
    assert objective(fine) <= objective(coarse) + 1e-15


def test_oracle_prox_errors():
    grid = line_grid(points=101, rounds=0)
    f = Affine(c=[1.0])
    with pytest.raises(NonPositiveGamma):
        oracle_prox_grid(f, 0.0, 1.0, grid)
    with pytest.raises(UnsupportedInstance):
        oracle_prox_grid(Affine(c=[1.0, 1.0]), 1.0, 1.0, grid)
    with pytest.raises(UnsupportedInstance):
        oracle_prox_grid(f, 1.0, 1.0, GridSpec(lower=[0.0, 0.0], upper=[1.0, 1.0]))


# --- augmented prox oracle ---

def test_oracle_prox_cvar_known_values():
    grid = GridSpec(lower=[-6.0, -6.0], upper=[6.0, 6.0], points=401, rounds=3)
    tol = 2.0 * float(grid.final_pitch.max())
    f = Affine(c=[1.0], r=0.0)
    thr, dec = oracle_prox_cvar_grid(f, 0.5, 1.0, -3.0, 1.0, grid)
    assert thr == pytest.approx(-2.0, abs=tol)
    assert dec == pytest.approx(-1.0, abs=tol)
    thr, dec = oracle_prox_cvar_grid(f, 0.5, 1.0, 0.0, 1.0, grid)
    assert thr == pytest.approx(0.0, abs=tol)
    assert dec == pytest.approx(0.0, abs=tol)
    thr, dec = oracle_prox_cvar_grid(f, 0.5, 1.0, 5.0, 1.0, grid)
    assert thr == pytest.approx(4.0, abs=tol)
    assert dec == pytest.approx(1.0, abs=tol)


def test_oracle_prox_cvar_errors():
    grid = GridSpec(lower=[-1.0, -1.0], upper=[1.0, 1.0], points=11, rounds=0)
    f = Affine(c=[1.0])
    with pytest.raises(NonPositiveGamma):
        oracle_prox_cvar_grid(f, 0.5, -1.0, 0.0, 0.0, grid)
    with pytest.raises(UnsupportedInstance):
        oracle_prox_cvar_grid(f, 1.5, 1.0, 0.0, 0.0, grid)
    with pytest.raises(UnsupportedInstance):
        oracle_prox_cvar_grid(f, 0.5, 1.0, 0.0, 0.0, line_grid(points=11, rounds=0))


# --- quadratic box oracle ---

def test_oracle_quadratic_box_pair():
    tree = build_tree([((0, 0), 0.5), ((1, 0), 0.5)], stage_dims=[1, 1])
    ops = (
        GradSeparableQuadratic(q=[1.0, 1.0], c=[0.0, 0.2]),
        GradSeparableQuadratic(q=[1.0, 1.0], c=[1.0, 0.8]),
    )
    cons = (Box(lo=[0.0, 0.0], hi=[1.0, 1.0]),) * 2
    prob = Problem(tree, ops, cons, (Full(),) * 2)
    got = oracle_solve_quadratic_box(prob)
    assert_allclose(got, [[0.5, 0.2], [0.5, 0.8]], atol=1e-9)


def test_oracle_quadratic_box_active_bounds():
    tree = build_tree([((0,), 1.0)], stage_dims=[2])
    prob = Problem(
        tree,
        (GradSeparableQuadratic(q=[1.0, 1.0], c=[1.5, -0.3]),),
        (Box(lo=[0.0, 0.0], hi=[1.0, 1.0]),),
        (Full(),),
    )
    assert_allclose(oracle_solve_quadratic_box(prob), [[1.0, 0.0]], atol=1e-10)


def test_oracle_quadratic_box_weighted_average():
    # zero-curvature coordinates stay at the clipped origin
    tree = build_tree([((0, 0), 0.8), ((1, 0), 0.2)], stage_dims=[1, 1])
    ops = (
        GradSeparableQuadratic(q=[2.0, 0.0], c=[1.0, 0.0]),
        GradSeparableQuadratic(q=[1.0, 1.0], c=[0.1, 0.9]),
    )
    cons = (Box(lo=[0.0, 0.0], hi=[1.0, 1.0]),) * 2
    got = oracle_solve_quadratic_box(Problem(tree, ops, cons, (Full(),) * 2))
    # shared coordinate solves (0.8*2 + 0.2*1) z = 0.8*2*1 + 0.2*1*0.1
    assert got[0, 0] == pytest.approx(1.62 / 1.8, abs=1e-9)
    assert got[0, 0] == got[1, 0]
    assert got[0, 1] == pytest.approx(0.0, abs=1e-12)
    assert got[1, 1] == pytest.approx(0.9, abs=1e-9)


def test_oracle_quadratic_box_rejections():
    tree = build_tree([((0,), 1.0)], stage_dims=[1])
    box = (Box(lo=[0.0], hi=[1.0]),)
    with pytest.raises(UnsupportedInstance):
        oracle_solve_quadratic_box(
            Problem(tree, (DiagonalAffine(a=[1.0], b=[0.0]),), box, (Full(),))
        )
    with pytest.raises(UnsupportedInstance):
        oracle_solve_quadratic_box(
            Problem(
                tree,
                (GradSeparableQuadratic(q=[1.0], c=[0.0]),),
                (WholeSpace(),),
                (Full(),),
            )
        )
    pair = build_tree([((0, 0), 0.5), ((1, 0), 0.5)], stage_dims=[1, 1])
    ops = (GradSeparableQuadratic(q=[1.0, 1.0], c=[0.5, 0.5]),) * 2
    disjoint = (
        Box(lo=[0.6, 0.0], hi=[1.0, 1.0]),
        Box(lo=[0.0, 0.0], hi=[0.4, 1.0]),
    )
    with pytest.raises(UnsupportedInstance):
        oracle_solve_quadratic_box(Problem(pair, ops, disjoint, (Full(),) * 2))


# --- tiny risk oracle ---

def test_oracle_cvar_small_affine_boundary():
    # single-stage tree: the lone decision is shared by both scenarios
    tree = build_tree([((0,), 0.7), ((1,), 0.3)], stage_dims=[1])
    cp = CvarProblem(
        tree,
        0.5,
        (Affine(c=[-1.0]), Affine(c=[0.5])),
        (Box(lo=[0.0], hi=[1.0]),) * 2,
    )
    grid = GridSpec(lower=[-0.5], upper=[1.5], points=201, rounds=2)
    point, value = oracle_cvar_small(cp, grid)
    tol = 2.0 * float(grid.final_pitch.max())
    assert_allclose(point, [[1.0], [1.0]], atol=tol)
    assert value == pytest.approx(-0.1, abs=tol)


def test_oracle_cvar_small_quadratic_common_minimum():
    tree = build_tree([((0,), 0.7), ((1,), 0.3)], stage_dims=[1])
    cp = CvarProblem(
        tree,
        0.3,
        (SeparableQuadratic(q=[1.0], c=[0.3]),) * 2,
        (WholeSpace(),) * 2,
    )
    grid = GridSpec(lower=[-1.0], upper=[1.0], points=201, rounds=2)
    point, value = oracle_cvar_small(cp, grid)
    tol = 2.0 * float(grid.final_pitch.max())
    assert_allclose(point, [[0.3], [0.3]], atol=tol)
    assert value == pytest.approx(0.0, abs=tol)


def test_oracle_cvar_small_beats_random_candidates():
    rng = np.random.default_rng(52)
    tree = build_tree([((0, 0), 0.5), ((1, 0), 0.5)], stage_dims=[1, 1])
    costs = (
        SeparableQuadratic(q=[1.0, 1.0], c=[0.0, 0.2]),
        SeparableQuadratic(q=[1.0, 1.0], c=[1.0, 0.8]),
    )
    cp = CvarProblem(tree, 0.6, costs, (WholeSpace(),) * 2)
    grid = GridSpec(lower=[-2.0] * 3, upper=[2.0] * 3, points=101, rounds=2)
    _, value = oracle_cvar_small(cp, grid)
    for _ in range(20):
        shared = rng.uniform(-2, 2)
        x = np.array([[shared, rng.uniform(-2, 2)], [shared, rng.uniform(-2, 2)]])
        losses = np.array([cost_value(f, x[i]) for i, f in enumerate(costs)])
        assert value <= cvar_value(tree, 0.6, losses) + 1e-9


def test_oracle_cvar_small_rejections():
    # four branches plus a shared root: 5 free coordinates
    wide = build_tree([((i, 0), 0.25) for i in range(4)], stage_dims=[1, 1])
    cp = CvarProblem(wide, 0.5, (Affine(c=[1.0, 1.0]),) * 4, (WholeSpace(),) * 4)
    grid4 = GridSpec(lower=[-1.0] * 4, upper=[1.0] * 4, points=11, rounds=0)
    with pytest.raises(TooManyFreeCoordinates):
        oracle_cvar_small(cp, grid4)

    pair = build_tree([((0,), 0.5), ((1,), 0.5)], stage_dims=[1])
    cp2 = CvarProblem(pair, 0.5, (Affine(c=[1.0]),) * 2, (WholeSpace(),) * 2)
    two_axes = GridSpec(lower=[-1.0, -1.0], upper=[1.0, 1.0], points=11, rounds=0)
    with pytest.raises(BadGrid):
        oracle_cvar_small(cp2, two_axes)

    # a grid that misses the feasible set entirely has no finite value
    off = CvarProblem(pair, 0.5, (Affine(c=[1.0]),) * 2, (Box(lo=[5.0], hi=[6.0]),) * 2)
    narrow = GridSpec(lower=[0.0], upper=[1.0], points=11, rounds=0)
    with pytest.raises(UnsupportedInstance):
        oracle_cvar_small(off, narrow)
