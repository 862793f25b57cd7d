"""Per-scenario operator catalog.

Closed-form resolvents and projectors for a small family of monotone
operators, convex costs, constraint sets and activation subspaces, plus the
two bisection-based proximity operators used by the risk-averse pipeline:
the prox of ``gamma * max{f(.), 0}`` and the prox of the augmented
threshold-plus-excess cost built from a base cost ``f`` and a tail level
``alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    BadAlpha,
    DimensionMismatch,
    NonPositiveGamma,
    ToleranceError,
    UnsupportedComposite,
    ValidationError,
)

# sentinel for an unbounded box side; clamping against it is a no-op
UNBOUNDED = float(np.finfo(np.float64).max)


def _vec(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-d array, got shape {arr.shape}")
    return arr


def _setfield(obj, name, value):
    object.__setattr__(obj, name, value)


# ---------------------------------------------------------------------------
# convex costs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Affine:
    """f(x) = <c, x> + r."""

    c: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        _setfield(self, "c", _vec(self.c))
        _setfield(self, "r", float(self.r))

    @property
    def dim(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class SeparableQuadratic:
    """f(x) = 0.5 * sum_i q_i (x_i - c_i)^2 + r with q >= 0."""

    q: np.ndarray
    c: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        _setfield(self, "q", _vec(self.q))
        _setfield(self, "c", _vec(self.c))
        _setfield(self, "r", float(self.r))
        if self.q.size != self.c.size:
            raise DimensionMismatch("q and c must have equal length")
        if np.any(self.q < 0):
            raise ValidationError("quadratic weights must be nonnegative")

    @property
    def dim(self) -> int:
        return self.q.size


CostSpec = Union[Affine, SeparableQuadratic]


def cost_value(f: CostSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size != f.dim:
        raise DimensionMismatch(f"cost expects dim {f.dim}, got {x.size}")
    if isinstance(f, Affine):
        return float(f.c @ x + f.r)
    if isinstance(f, SeparableQuadratic):
        return float(0.5 * np.sum(f.q * (x - f.c) ** 2) + f.r)
    raise TypeError(f"unknown cost spec {type(f).__name__}")


def cost_prox(f: CostSpec, gamma: float, x) -> np.ndarray:
    """argmin_p gamma*f(p) + 0.5*||p - x||^2; gamma = 0 gives x back."""
    x = np.asarray(x, dtype=float)
    if x.size != f.dim:
        raise DimensionMismatch(f"cost expects dim {f.dim}, got {x.size}")
    if gamma < 0:
        raise NonPositiveGamma(f"prox parameter {gamma} is negative")
    if isinstance(f, Affine):
        return x - gamma * f.c
    if isinstance(f, SeparableQuadratic):
        return (x + gamma * f.q * f.c) / (1.0 + gamma * f.q)
    raise TypeError(f"unknown cost spec {type(f).__name__}")


# ---------------------------------------------------------------------------
# monotone operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagonalAffine:
    """A(x) = a * x + b componentwise, with a >= 0 so A is monotone."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        _setfield(self, "a", _vec(self.a))
        _setfield(self, "b", _vec(self.b))
        if self.a.size != self.b.size:
            raise DimensionMismatch("a and b must have equal length")
        if np.any(self.a < 0):
            raise ValidationError("diagonal coefficients must be nonnegative")

    @property
    def dim(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class GradSeparableQuadratic:
    """A(x) = q * (x - c): gradient of x -> 0.5 * sum_i q_i (x_i - c_i)^2."""

    q: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        _setfield(self, "q", _vec(self.q))
        _setfield(self, "c", _vec(self.c))
        if self.q.size != self.c.size:
            raise DimensionMismatch("q and c must have equal length")
        if np.any(self.q < 0):
            raise ValidationError("quadratic weights must be nonnegative")

    @property
    def dim(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class CvarAugmented:
    """Subdifferential of (y, x) -> y + max{f(x) - y, 0} / (1 - alpha).

    Acts on R x R^d where d is the dimension of the wrapped cost; the
    threshold coordinate comes first.
    """

    f: CostSpec
    alpha: float

    def __post_init__(self):
        _setfield(self, "alpha", float(self.alpha))
        if not 0.0 < self.alpha < 1.0:
            raise BadAlpha(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def dim(self) -> int:
        return 1 + self.f.dim


OperatorSpec = Union[DiagonalAffine, GradSeparableQuadratic, CvarAugmented]


def apply_operator(op: OperatorSpec, x) -> np.ndarray:
    """Forward evaluation, defined for the single-valued catalog entries."""
    x = np.asarray(x, dtype=float)
    if isinstance(op, DiagonalAffine):
        return op.a * x + op.b
    if isinstance(op, GradSeparableQuadratic):
        return op.q * (x - op.c)
    raise TypeError(f"{type(op).__name__} has no single-valued forward map")


def resolvent(op: OperatorSpec, gamma: float, z) -> np.ndarray:
    """Solve p + gamma*A(p) = z for the catalog operator A."""
    if gamma <= 0:
        raise NonPositiveGamma(f"resolvent parameter {gamma} must be positive")
    z = np.asarray(z, dtype=float)
    if z.size != op.dim:
        raise DimensionMismatch(f"operator expects dim {op.dim}, got {z.size}")
    if isinstance(op, DiagonalAffine):
        return (z - gamma * op.b) / (1.0 + gamma * op.a)
    if isinstance(op, GradSeparableQuadratic):
        return (z + gamma * op.q * op.c) / (1.0 + gamma * op.q)
    if isinstance(op, CvarAugmented):
        head, rest = prox_cvar_augmented(op.f, op.alpha, gamma, float(z[0]), z[1:])
        return np.concatenate(([head], rest))
    raise TypeError(f"unknown operator spec {type(op).__name__}")


# ---------------------------------------------------------------------------
# constraint sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WholeSpace:
    """No constraint; the projector is the identity in any dimension."""

    @property
    def dim(self):
        return None


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; infinite bounds are stored as +-UNBOUNDED."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _vec(self.lo).copy()
        hi = _vec(self.hi).copy()
        if lo.size != hi.size:
            raise DimensionMismatch("lo and hi must have equal length")
        lo[np.isneginf(lo)] = -UNBOUNDED
        hi[np.isposinf(hi)] = UNBOUNDED
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValidationError("box bounds must be finite or +-inf")
        if np.any(lo > hi):
            raise ValidationError("box needs lo <= hi componentwise")
        _setfield(self, "lo", _frozen(lo))
        _setfield(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.size


@dataclass(frozen=True)
class Ball:
    """Euclidean ball of positive radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        _setfield(self, "center", _vec(self.center))
        _setfield(self, "radius", float(self.radius))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValidationError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class Halfspace:
    """{x : <normal, x> <= offset} with a nonzero normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        _setfield(self, "normal", _vec(self.normal))
        _setfield(self, "offset", float(self.offset))
        if not np.any(self.normal != 0):
            raise ValidationError("halfspace normal must be nonzero")

    @property
    def dim(self) -> int:
        return self.normal.size


@dataclass(frozen=True)
class Hyperplane:
    """{x : <normal, x> = offset} with a nonzero normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        _setfield(self, "normal", _vec(self.normal))
        _setfield(self, "offset", float(self.offset))
        if not np.any(self.normal != 0):
            raise ValidationError("hyperplane normal must be nonzero")

    @property
    def dim(self) -> int:
        return self.normal.size


@dataclass(frozen=True)
class RealCross:
    """R x base: first coordinate free, the base set on the rest.

    Used by the risk-averse pipeline, where the threshold coordinate is
    unconstrained and the original constraint applies to the decisions.
    """

    base: "ConstraintSpec"

    @property
    def dim(self):
        inner = self.base.dim
        return None if inner is None else inner + 1


ConstraintSpec = Union[WholeSpace, Box, Ball, Halfspace, Hyperplane, RealCross]


def _check_dim(spec, z: np.ndarray):
    if spec.dim is not None and z.size != spec.dim:
        raise DimensionMismatch(f"{type(spec).__name__} expects dim {spec.dim}, got {z.size}")


def project_constraint(cs: ConstraintSpec, z) -> np.ndarray:
    """Euclidean projection onto the constraint set."""
    z = np.asarray(z, dtype=float)
    _check_dim(cs, z)
    if isinstance(cs, WholeSpace):
        return z.copy()
    if isinstance(cs, Box):
        return np.clip(z, cs.lo, cs.hi)
    if isinstance(cs, Ball):
        shift = z - cs.center
        dist = float(np.linalg.norm(shift))
        if dist <= cs.radius:
            return z.copy()
        return cs.center + (cs.radius / dist) * shift
    if isinstance(cs, Halfspace):
        slack = float(cs.normal @ z) - cs.offset
        if slack <= 0:
            return z.copy()
        return z - (slack / float(cs.normal @ cs.normal)) * cs.normal
    if isinstance(cs, Hyperplane):
        slack = float(cs.normal @ z) - cs.offset
        return z - (slack / float(cs.normal @ cs.normal)) * cs.normal
    if isinstance(cs, RealCross):
        if z.size < 1:
            raise DimensionMismatch("RealCross needs at least one coordinate")
        out = np.empty_like(z)
        out[0] = z[0]
        out[1:] = project_constraint(cs.base, z[1:])
        return out
    raise TypeError(f"unknown constraint spec {type(cs).__name__}")


# ---------------------------------------------------------------------------
# activation subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Full:
    """The whole space; projection is the identity."""

    @property
    def dim(self):
        return None


@dataclass(frozen=True)
class Zero:
    """The trivial subspace {0}."""

    @property
    def dim(self):
        return None


@dataclass(frozen=True)
class Coordinates:
    """Span of the listed coordinate axes (0-based indices)."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValidationError("coordinate indices must be distinct")
        if any(i < 0 for i in idx):
            raise ValidationError("coordinate indices must be nonnegative")
        _setfield(self, "indices", idx)

    @property
    def dim(self):
        return None


SubspaceSpec = Union[Full, Zero, Coordinates]


def project_subspace(us: SubspaceSpec, z) -> np.ndarray:
    """Orthogonal projection onto the activation subspace."""
    z = np.asarray(z, dtype=float)
    if isinstance(us, Full):
        return z.copy()
    if isinstance(us, Zero):
        return np.zeros_like(z)
    if isinstance(us, Coordinates):
        if us.indices and max(us.indices) >= z.size:
            raise DimensionMismatch(
                f"coordinate index {max(us.indices)} out of range for dim {z.size}"
            )
        out = np.zeros_like(z)
        sel = list(us.indices)
        out[sel] = z[sel]
        return out
    raise TypeError(f"unknown subspace spec {type(us).__name__}")


def validate_range_condition(cs: ConstraintSpec, us: SubspaceSpec) -> bool:
    """Check that every point moved by the projector moves inside ``us``.

    Conservative catalog test: it returns True only when the geometry
    guarantees ran(Id - proj) is contained in the subspace, False otherwise.
    """
    if isinstance(us, Full):
        return True
    if isinstance(cs, WholeSpace):
        # the projector is the identity, its displacement range is {0}
        return True
    if isinstance(cs, RealCross) and isinstance(cs.base, WholeSpace):
        return True
    if isinstance(us, Zero):
        return False
    if isinstance(us, Coordinates):
        sel = set(us.indices)
        if isinstance(cs, Box):
            free = {
                i
                for i in range(cs.dim)
                if cs.lo[i] <= -UNBOUNDED and cs.hi[i] >= UNBOUNDED
            }
            return sel <= set(range(cs.dim)) and free == set(range(cs.dim)) - sel
        if isinstance(cs, (Halfspace, Hyperplane)):
            # displacements are multiples of the normal
            support = {i for i in range(cs.dim) if cs.normal[i] != 0}
            return support <= sel and sel <= set(range(cs.dim))
    return False


# ---------------------------------------------------------------------------
# proximity operators for the risk-averse pipeline
# ---------------------------------------------------------------------------

def _bisect_decreasing(g, tol: float, max_iter: int = 200) -> float:
    """Root of a continuous decreasing g on [0, 1] with g(0) >= 0 >= g(1)."""
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def prox_max_nonneg(f: CostSpec, gamma: float, x, tol: float = 1e-12) -> np.ndarray:
    """Prox of ``gamma * max{f(.), 0}`` for a catalog cost f.

    Three mutually exclusive regimes: the point already satisfies f < 0;
    the plain prox of gamma*f lands in {f > 0}; otherwise the prox scale
    theta*gamma is driven by bisection until f vanishes at the prox point.
    """
    if gamma <= 0:
        raise NonPositiveGamma(f"prox parameter {gamma} must be positive")
    if tol <= 0:
        raise ToleranceError(f"bisection tolerance {tol} must be positive")
    x = np.asarray(x, dtype=float)
    if cost_value(f, x) < 0.0:
        return x.copy()
    at_full = cost_prox(f, gamma, x)
    if cost_value(f, at_full) > 0.0:
        return at_full
    theta = _bisect_decreasing(lambda t: cost_value(f, cost_prox(f, t * gamma, x)), tol)
    return cost_prox(f, theta * gamma, x)


def prox_cvar_augmented(
    f: CostSpec, alpha: float, gamma: float, y: float, x, tol: float = 1e-12
):
    """Prox of gamma * [y + max{f(x) - y, 0} / (1 - alpha)] at (y, x).

    Returns the pair (threshold, decisions).  With tau = gamma/(1 - alpha),
    either the shifted point (y - gamma, x) already has f below the
    threshold, or the full-step prox of tau*f overshoots it, or the step
    fraction theta solves f(prox_{theta*tau*f} x) - y + gamma - theta*tau = 0.
    """
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if gamma <= 0:
        raise NonPositiveGamma(f"prox parameter {gamma} must be positive")
    if tol <= 0:
        raise ToleranceError(f"bisection tolerance {tol} must be positive")
    x = np.asarray(x, dtype=float)
    y = float(y)
    tau = gamma / (1.0 - alpha)
    if cost_value(f, x) - y + gamma < 0.0:
        return y - gamma, x.copy()
    at_full = cost_prox(f, tau, x)
    if cost_value(f, at_full) - y > tau - gamma:
        return y - gamma + tau, at_full

    def g(t: float) -> float:
        return cost_value(f, cost_prox(f, t * tau, x)) - y + gamma - t * tau

    theta = _bisect_decreasing(g, tol)
    return y - gamma + theta * tau, cost_prox(f, theta * tau, x)


def composite_resolvent(op: OperatorSpec, cs: ConstraintSpec, gamma: float, z) -> np.ndarray:
    """Resolvent of gamma*(A + normal cone of C) for separable pairs.

    Supported: DiagonalAffine or GradSeparableQuadratic with Box (or no
    constraint).  Componentwise the constrained solution is the clamp of the
    unconstrained one because each scalar equation is monotone.
    """
    if gamma <= 0:
        raise NonPositiveGamma(f"resolvent parameter {gamma} must be positive")
    if not isinstance(op, (DiagonalAffine, GradSeparableQuadratic)):
        raise UnsupportedComposite(
            f"no composite resolvent for operator {type(op).__name__}"
        )
    if isinstance(cs, WholeSpace):
        return resolvent(op, gamma, z)
    if not isinstance(cs, Box):
        raise UnsupportedComposite(
            f"no composite resolvent for constraint {type(cs).__name__}"
        )
    z = np.asarray(z, dtype=float)
    _check_dim(cs, z)
    return np.clip(resolvent(op, gamma, z), cs.lo, cs.hi)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr
