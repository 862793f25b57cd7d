"""Block-activated splitting solver for scenario-form equilibrium problems.

The problem couples one monotone operator and one constraint set per
scenario through the nonanticipativity subspace.  Each iteration activates
a block of scenarios, refreshes their resolvent/projection intermediates
(keeping stale values elsewhere), builds a separating half-space from all
intermediates and projects the primal-dual iterate onto it.  A classical
averaging baseline and an unconstrained reduced variant are included.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import policy
from .errors import (
    ConfigError,
    DimensionMismatch,
    NonPositiveGamma,
    NonTrivialConstraint,
    ValidationError,
)
from .operators import (
    ConstraintSpec,
    Full,
    OperatorSpec,
    SubspaceSpec,
    WholeSpace,
    Zero,
    apply_operator,
    composite_resolvent,
    project_constraint,
    project_subspace,
    resolvent,
    validate_range_condition,
)
from .tree import ScenarioTree


# ---------------------------------------------------------------------------
# problem container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """One operator, constraint set and activation subspace per scenario."""

    tree: ScenarioTree
    operators: tuple[OperatorSpec, ...]
    constraints: tuple[ConstraintSpec, ...]
    subspaces: tuple[SubspaceSpec, ...]

    def __post_init__(self):
        n = self.tree.num_scenarios
        d = self.tree.total_dim
        object.__setattr__(self, "operators", tuple(self.operators))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "subspaces", tuple(self.subspaces))
        for name, seq in (
            ("operators", self.operators),
            ("constraints", self.constraints),
            ("subspaces", self.subspaces),
        ):
            if len(seq) != n:
                raise ValidationError(f"{name}: got {len(seq)} entries for {n} scenarios")
        for i, op in enumerate(self.operators):
            if op.dim is not None and op.dim != d:
                raise DimensionMismatch(f"operator {i} has dim {op.dim}, tree needs {d}")
        for i, cs in enumerate(self.constraints):
            if cs.dim is not None and cs.dim != d:
                raise DimensionMismatch(f"constraint {i} has dim {cs.dim}, tree needs {d}")
        for i, us in enumerate(self.subspaces):
            idx = getattr(us, "indices", ())
            if idx and max(idx) >= d:
                raise DimensionMismatch(f"subspace {i} indexes axis {max(idx)}, dim is {d}")
        for i, (cs, us) in enumerate(zip(self.constraints, self.subspaces)):
            if not validate_range_condition(cs, us):
                raise ValidationError(f"range condition violated for scenario {i}")


def make_problem(tree, operators, constraints=None, subspaces=None) -> Problem:
    """Convenience constructor; defaults to no constraints, full subspaces."""
    n = tree.num_scenarios
    if constraints is None:
        constraints = (WholeSpace(),) * n
    if subspaces is None:
        subspaces = (Full(),) * n
    return Problem(tree, tuple(operators), tuple(constraints), tuple(subspaces))


# ---------------------------------------------------------------------------
# activation schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FullActivation:
    """Every scenario, every iteration."""

    def cover_window(self, num_scenarios: int) -> int:
        return 0

    def select(self, n, num_scenarios, last_activated, rng) -> np.ndarray:
        return np.arange(num_scenarios)


@dataclass(frozen=True)
class RoundRobin:
    """Cyclic contiguous blocks of a fixed size."""

    block_size: int = 1

    def __post_init__(self):
        if self.block_size < 1:
            raise ConfigError(f"block_size must be >= 1, got {self.block_size}")

    def cover_window(self, num_scenarios: int) -> int:
        return math.ceil(num_scenarios / self.block_size) - 1

    def select(self, n, num_scenarios, last_activated, rng) -> np.ndarray:
        if n == 0:
            return np.arange(num_scenarios)
        period = math.ceil(num_scenarios / self.block_size)
        pos = (n - 1) % period
        start = pos * self.block_size
        return np.arange(start, min(start + self.block_size, num_scenarios))


@dataclass(frozen=True)
class SeededRandom:
    """Uniform random block, force-including scenarios that have waited.

    A scenario inactive for ``cover_window`` iterations is put into the
    block first; the remaining slots are filled uniformly without
    replacement.  Fully deterministic for a fixed seed.
    """

    block_size: int = 1
    cover_window: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.block_size < 1:
            raise ConfigError(f"block_size must be >= 1, got {self.block_size}")
        if self.cover_window < 0:
            raise ConfigError(f"cover_window must be >= 0, got {self.cover_window}")

    def select(self, n, num_scenarios, last_activated, rng) -> np.ndarray:
        if n == 0:
            return np.arange(num_scenarios)
        overdue = np.flatnonzero(last_activated <= n - self.cover_window - 1)
        rest = np.setdiff1d(np.arange(num_scenarios), overdue, assume_unique=True)
        slots = min(max(self.block_size - overdue.size, 0), rest.size)
        picked = rng.choice(rest, size=slots, replace=False) if slots else rest[:0]
        return np.sort(np.concatenate([overdue, picked]))


ActivationSchedule = Union[FullActivation, RoundRobin, SeededRandom]


# ---------------------------------------------------------------------------
# configuration, state, results
# ---------------------------------------------------------------------------

StepRule = Union[float, Sequence[float], Callable]


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes, activation schedule and stopping rules.

    ``gamma`` and ``mu`` accept a constant, a per-scenario sequence, or a
    callable ``(scenario, iteration) -> float``; ``lambda_rule`` accepts a
    constant or a callable ``iteration -> float``.  Values outside the
    admissible intervals raise instead of being clamped.
    """

    epsilon: float = 1e-3
    gamma: StepRule = 1.0
    mu: StepRule = 1.0
    lambda_rule: Union[float, Callable] = 1.0
    schedule: ActivationSchedule = field(default_factory=FullActivation)
    tol: float = 1e-8
    max_iter: int = 100000
    trace_every: int = 1
    record_timing: bool = False
    threads: int = 1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.tol < 0:
            raise ConfigError(f"tol must be nonnegative, got {self.tol}")
        if self.max_iter < 0:
            raise ConfigError(f"max_iter must be nonnegative, got {self.max_iter}")
        if self.trace_every < 1:
            raise ConfigError(f"trace_every must be >= 1, got {self.trace_every}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        lo, hi = self.epsilon, 1.0 / self.epsilon
        for name, rule in (("gamma", self.gamma), ("mu", self.mu)):
            if isinstance(rule, (int, float)):
                _check_range(name, float(rule), lo, hi)
            elif not callable(rule):
                for v in np.asarray(rule, dtype=float).ravel():
                    _check_range(name, float(v), lo, hi)
        if isinstance(self.lambda_rule, (int, float)):
            _check_range("lambda", float(self.lambda_rule), lo, 2.0 - self.epsilon)
        elif not callable(self.lambda_rule):
            raise ConfigError("lambda_rule must be a number or a callable")


def _check_range(name: str, value: float, lo: float, hi: float):
    if not lo <= value <= hi:
        raise ConfigError(f"{name} value {value} outside [{lo}, {hi}]")


def _step_value(rule: StepRule, scenario: int, n: int) -> float:
    if isinstance(rule, (int, float)):
        return float(rule)
    if callable(rule):
        return float(rule(scenario, n))
    return float(rule[scenario])


def _lambda_value(config: SolverConfig, n: int) -> float:
    rule = config.lambda_rule
    if callable(rule):
        v = float(rule(n))
        _check_range("lambda", v, config.epsilon, 2.0 - config.epsilon)
        return v
    return float(rule)


@dataclass
class SolverState:
    """Mutable iterate plus per-scenario intermediates.

    ``op_point``/``op_dual`` come from the operator resolvent, ``set_point``
    /``set_dual`` from the constraint projection, ``gap`` is the activation
    subspace's view of their mismatch.  Rows of inactive scenarios are kept
    bitwise unchanged between activations.
    """

    iteration: int
    x: np.ndarray
    x_star: np.ndarray
    v_star: np.ndarray
    op_point: np.ndarray
    op_dual: np.ndarray
    set_point: np.ndarray
    set_dual: np.ndarray
    gap: np.ndarray
    last_activated: np.ndarray
    rng: Optional[np.random.Generator] = None
    active: np.ndarray = field(default_factory=lambda: np.arange(0))
    kappa: float = 0.0
    tau: float = 0.0
    theta: float = 0.0


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class TraceRecord:
    n: int
    residual: float
    kappa: float
    tau: float
    theta: float
    active: tuple[int, ...]
    wall_ms: float = 0.0

    @property
    def active_block_size(self) -> int:
        return len(self.active)


@dataclass(frozen=True)
class Solution:
    x_bar: np.ndarray
    v_star_bar: np.ndarray
    status: SolveStatus
    iterations: int
    residual: float
    trace: tuple[TraceRecord, ...]


# ---------------------------------------------------------------------------
# iteration pieces
# ---------------------------------------------------------------------------

def init_state(problem: Problem, config: SolverConfig, x0=None, x0_star=None, v0_star=None) -> SolverState:
    """Feasible starting state: x in the subspace, duals in their ranges."""
    tree = problem.tree
    n, d = tree.num_scenarios, tree.total_dim
    x = policy.zeros(tree) if x0 is None else policy.check_policy(tree, x0).copy()
    xs = policy.zeros(tree) if x0_star is None else policy.check_policy(tree, x0_star).copy()
    vs = policy.zeros(tree) if v0_star is None else policy.check_policy(tree, v0_star).copy()
    x = policy.project_nonanticipative(tree, x)
    vs = policy.project_nonanticipative_complement(tree, vs)
    for i in range(n):
        xs[i] = project_subspace(problem.subspaces[i], xs[i])
    rng = None
    if isinstance(config.schedule, SeededRandom):
        rng = np.random.default_rng(config.schedule.seed)
    return SolverState(
        iteration=0,
        x=x,
        x_star=xs,
        v_star=vs,
        op_point=np.zeros((n, d)),
        op_dual=np.zeros((n, d)),
        set_point=np.zeros((n, d)),
        set_dual=np.zeros((n, d)),
        gap=np.zeros((n, d)),
        last_activated=np.full(n, -1, dtype=int),
        rng=rng,
    )


def scenario_update(state: SolverState, problem: Problem, scenario: int, gamma: float, mu: float):
    """Refresh one scenario's intermediates at the current iterate.

    Returns ``(op_point, op_dual, set_point, set_dual, gap)``; op_dual lies
    in the operator's graph at op_point, set_dual in the normal cone of the
    constraint at set_point, by construction.
    """
    if gamma <= 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    if mu <= 0:
        raise ConfigError(f"mu must be positive, got {mu}")
    x = state.x[scenario]
    xs = state.x_star[scenario]
    vs = state.v_star[scenario]
    load = xs + vs
    op_point = resolvent(problem.operators[scenario], gamma, x - gamma * load)
    op_dual = (x - op_point) / gamma - load
    set_point = project_constraint(problem.constraints[scenario], x + mu * xs)
    set_dual = xs + (x - set_point) / mu
    gap = project_subspace(problem.subspaces[scenario], set_point - op_point)
    return op_point, op_dual, set_point, set_dual, gap


def coordination_step(state: SolverState, problem: Problem, config: SolverConfig) -> SolverState:
    """Project the iterate onto the separating half-space and advance n."""
    tree = problem.tree
    dual_avg = policy.project_nonanticipative(tree, state.op_dual + state.set_dual)
    anti = -policy.project_nonanticipative_complement(tree, state.op_point)
    tau = (
        policy.inner(tree, dual_avg, dual_avg)
        + policy.inner(tree, state.gap, state.gap)
        + policy.inner(tree, anti, anti)
    )
    if tau > 0.0:
        # x lies in the nonanticipative subspace throughout, so pairing it
        # with the averaged dual equals pairing it with the raw duals; the
        # grouped form below avoids cancellation between O(1) inner products
        # once the gaps are tiny
        kappa = (
            policy.inner(tree, state.x - state.op_point, state.op_dual)
            + policy.inner(tree, state.x - state.set_point, state.set_dual)
            + policy.inner(tree, state.gap, state.x_star)
            + policy.inner(tree, anti, state.v_star)
        )
        theta = _lambda_value(config, state.iteration) * max(kappa, 0.0) / tau
    else:
        kappa = 0.0
        theta = 0.0
    state.x -= theta * dual_avg
    state.x_star -= theta * state.gap
    state.v_star -= theta * anti
    state.kappa = kappa
    state.tau = tau
    state.theta = theta
    state.iteration += 1
    return state


def iterate(state: SolverState, problem: Problem, config: SolverConfig) -> SolverState:
    """One full iteration: block refresh, then the coordination step."""
    n = state.iteration
    num = problem.tree.num_scenarios
    if n == 0:
        active = np.arange(num)  # the first sweep must see every scenario
    else:
        active = np.asarray(
            config.schedule.select(n, num, state.last_activated, state.rng), dtype=int
        )
    lo, hi = config.epsilon, 1.0 / config.epsilon

    def refresh(i: int):
        g = _step_value(config.gamma, i, n)
        m = _step_value(config.mu, i, n)
        _check_range("gamma", g, lo, hi)
        _check_range("mu", m, lo, hi)
        out = scenario_update(state, problem, i, g, m)
        (
            state.op_point[i],
            state.op_dual[i],
            state.set_point[i],
            state.set_dual[i],
            state.gap[i],
        ) = out

    if config.threads > 1 and active.size > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(refresh, active))
    else:
        for i in active:
            refresh(int(i))

    coordination_step(state, problem, config)
    state.last_activated[active] = n
    state.active = active
    return state


def kkt_residual(problem: Problem, x, x_star, v_star) -> float:
    """Scalar optimality measure, zero exactly at equilibrium triples.

    Combines the per-scenario fixed-point gaps of the operator resolvent
    and the constraint projector with the subspace residuals of x and the
    coupling dual.
    """
    tree = problem.tree
    x = policy.check_policy(tree, x)
    xs = policy.check_policy(tree, x_star)
    vs = policy.check_policy(tree, v_star)
    total = 0.0
    for i in range(tree.num_scenarios):
        op_gap = x[i] - resolvent(problem.operators[i], 1.0, x[i] - xs[i] - vs[i])
        set_gap = x[i] - project_constraint(problem.constraints[i], x[i] + xs[i])
        total += tree.probabilities[i] * (op_gap @ op_gap + set_gap @ set_gap)
    anti = policy.project_nonanticipative_complement(tree, x)
    dual = policy.project_nonanticipative(tree, vs)
    total += policy.inner(tree, anti, anti) + policy.inner(tree, dual, dual)
    return float(np.sqrt(max(total, 0.0)))


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def solve(
    problem: Problem,
    config: Optional[SolverConfig] = None,
    x0=None,
    x0_star=None,
    v0_star=None,
    callback=None,
) -> Solution:
    """Run the block-activated iteration until the residual meets ``tol``."""
    if config is None:
        config = SolverConfig()
    state = init_state(problem, config, x0, x0_star, v0_star)
    trace = []
    start = time.perf_counter()
    while True:
        residual = kkt_residual(problem, state.x, state.x_star, state.v_star)
        if residual <= config.tol:
            status = SolveStatus.CONVERGED
            break
        if state.iteration >= config.max_iter:
            status = SolveStatus.MAX_ITER
            break
        n = state.iteration
        iterate(state, problem, config)
        if n % config.trace_every == 0:
            wall = (time.perf_counter() - start) * 1e3 if config.record_timing else 0.0
            trace.append(
                TraceRecord(
                    n=n,
                    residual=residual,
                    kappa=state.kappa,
                    tau=state.tau,
                    theta=state.theta,
                    active=tuple(int(i) for i in state.active),
                    wall_ms=wall,
                )
            )
        if callback is not None:
            callback(state)
    return Solution(
        x_bar=state.x.copy(),
        v_star_bar=state.v_star.copy(),
        status=status,
        iterations=state.iteration,
        residual=residual,
        trace=tuple(trace),
    )


def progressive_hedging_solve(
    problem: Problem,
    gamma: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 100000,
    trace_every: int = 1,
    record_timing: bool = False,
) -> Solution:
    """Classical averaging baseline for composite-supported instances.

    Per scenario the full operator-plus-constraint resolvent is applied at
    ``x - gamma * v_star``; the primal averages back to the subspace, the
    dual absorbs the residual part.  Stops on the same residual as the
    block-activated solver, with the constraint multiplier recovered from
    the resolvent identity.
    """
    if gamma <= 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    tree = problem.tree
    for op, cs in zip(problem.operators, problem.constraints):
        composite_resolvent(op, cs, gamma, np.zeros(tree.total_dim))  # capability probe
    x = policy.zeros(tree)
    vs = policy.zeros(tree)
    sub = policy.zeros(tree)
    implied = policy.zeros(tree)
    trace = []
    n = 0
    start = time.perf_counter()
    while True:
        for i in range(tree.num_scenarios):
            sub[i] = composite_resolvent(
                problem.operators[i], problem.constraints[i], gamma, x[i] - gamma * vs[i]
            )
            implied[i] = (x[i] - sub[i]) / gamma - vs[i] - apply_operator(
                problem.operators[i], sub[i]
            )
        x = policy.project_nonanticipative(tree, sub)
        vs = vs + policy.project_nonanticipative_complement(tree, sub) / gamma
        residual = kkt_residual(problem, x, implied, vs)
        if n % trace_every == 0:
            wall = (time.perf_counter() - start) * 1e3 if record_timing else 0.0
            trace.append(
                TraceRecord(
                    n=n,
                    residual=residual,
                    kappa=float("nan"),
                    tau=float("nan"),
                    theta=float("nan"),
                    active=tuple(range(tree.num_scenarios)),
                    wall_ms=wall,
                )
            )
        n += 1
        if residual <= tol:
            status = SolveStatus.CONVERGED
            break
        if n >= max_iter:
            status = SolveStatus.MAX_ITER
            break
    return Solution(
        x_bar=x.copy(),
        v_star_bar=vs.copy(),
        status=status,
        iterations=n,
        residual=residual,
        trace=tuple(trace),
    )


def solve_reduced(
    problem: Problem, config: Optional[SolverConfig] = None, callback=None
) -> Solution:
    """Unconstrained specialization with trivial activation subspaces.

    Requires every constraint to be the whole space; then the constraint
    multiplier and the subspace gap stay exactly zero along the run, which
    is asserted, and the iteration reduces to its operator half.
    """
    for i, cs in enumerate(problem.constraints):
        if not isinstance(cs, WholeSpace):
            raise NonTrivialConstraint(
                f"scenario {i} has constraint {type(cs).__name__}; the reduced "
                "variant needs unconstrained instances"
            )
    if config is None:
        config = SolverConfig()
    reduced = Problem(
        tree=problem.tree,
        operators=problem.operators,
        constraints=problem.constraints,
        subspaces=(Zero(),) * problem.tree.num_scenarios,
    )
    config = replace(config, mu=1.0)

    def guard(state: SolverState):
        if np.any(state.x_star != 0.0) or np.any(state.gap != 0.0):
            raise AssertionError("reduced-variant invariant broken: nonzero multiplier")
        if callback is not None:
            callback(state)

    return solve(reduced, config, callback=guard)
