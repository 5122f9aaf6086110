from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from ._types import SIDE
from .cones import (
    ConstraintSystem,
    PolyhedralCone,
    active_set,
    extreme_rays,
    lp_phase_one,
    tangent_cone,
)
from .exception import DimensionError, DimensionTooLarge
from .exprcore import Expr, Point, gradient, hessian, kinks, variables

__all__ = [
    "MinimaxProblem",
    "MultiplierPolyhedron",
    "VertexSet",
    "LagrangianHessians",
    "multiplier_set",
    "critical_cone",
    "vertices",
    "lagrangian_hessians",
]

MAX_MULTIPLIER_COMPONENTS = 8


@dataclass(frozen=True)
class MinimaxProblem:
    """min over x in X of max over y in Y of f(x, y), with X and Y given by constraint systems.
    box optionally bounds the search region of the grid oracle, one (low, high) per variable."""

    n: int
    m: int
    f: Expr
    x_constraints: ConstraintSystem | None = None
    y_constraints: ConstraintSystem | None = None
    assume_mscq: bool = False
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise DimensionError(f"dimensions must be positive, got n={self.n}, m={self.m}")
        if self.x_constraints is None:
            object.__setattr__(self, "x_constraints", ConstraintSystem("x", self.n))
        if self.y_constraints is None:
            object.__setattr__(self, "y_constraints", ConstraintSystem("y", self.m))
        if self.x_constraints.block != "x" or self.x_constraints.dim != self.n:
            raise DimensionError("x constraints must live in the x block of dimension n")
        if self.y_constraints.block != "y" or self.y_constraints.dim != self.m:
            raise DimensionError("y constraints must live in the y block of dimension m")
        for axis, index in variables(self.f):
            if index > (self.n if axis == "x" else self.m):
                raise DimensionError(f"objective references {axis}{index} beyond n={self.n}, m={self.m}")
        if self.box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in self.box)
            if len(box) != self.n + self.m or any(lo > hi for lo, hi in box):
                raise DimensionError(f"box must give n+m={self.n + self.m} ordered (low, high) pairs")
            object.__setattr__(self, "box", box)

    def system(self, side: SIDE) -> ConstraintSystem:
        return self.x_constraints if side == "min" else self.y_constraints

    def block(self, p: Point, side: SIDE) -> tuple[float, ...]:
        return p.x if side == "min" else p.y

    def check_point(self, p: Point, tol: float = 1e-8) -> None:
        """Raise DimensionError or InfeasiblePoint unless p is a feasible point of X × Y."""
        if p.n != self.n or p.m != self.m:
            raise DimensionError(f"point has dimensions ({p.n}, {p.m}), expected ({self.n}, {self.m})")
        active_set(self.x_constraints, p.x, tol)
        active_set(self.y_constraints, p.y, tol)

    @property
    def is_unconstrained(self) -> bool:
        return self.x_constraints.is_unconstrained and self.y_constraints.is_unconstrained

    @property
    def has_affine_constraints(self) -> bool:
        return self.x_constraints.is_affine and self.y_constraints.is_affine

    @property
    def mscq(self) -> bool:
        """MSCQ is taken as given when asserted or when every constraint is affine."""
        return self.assume_mscq or self.has_affine_constraints

    def smooth_at(self, p: Point) -> bool:
        if kinks(self.f, p):
            return False
        return not any(
            kinks(c.expr, cs.point(z))
            for cs, z in ((self.x_constraints, p.x), (self.y_constraints, p.y))
            for c in cs.constraints
        )


@dataclass(frozen=True, eq=False)
class MultiplierPolyhedron:
    """{v : matrix·v = rhs, v_i >= 0 for i in sign_constrained}.
    The variables are the multipliers of the active inequalities followed by the equalities;
    indices maps each variable back to its position in the constraint list."""

    matrix: np.ndarray
    rhs: np.ndarray
    sign_constrained: tuple[int, ...]
    free: tuple[int, ...]
    side: SIDE
    indices: tuple[int, ...]
    num_constraints: int
    point: np.ndarray | None = None
    residual: float = 0.0

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return self.point is None

    def expand(self, v: Sequence[float]) -> np.ndarray:
        """Full-length multiplier vector with zeros on the inactive constraints."""
        full = np.zeros(self.num_constraints)
        for i, value in zip(self.indices, v):
            full[i] = value
        return full

    def contains(self, v: Sequence[float], tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            return False
        if np.any(v[list(self.sign_constrained)] < -tol):
            return False
        return bool(np.linalg.norm(self.matrix @ v - self.rhs) <= tol * max(1.0, np.linalg.norm(v)))


@dataclass(frozen=True, eq=False)
class VertexSet:
    vertices: tuple[np.ndarray, ...] = ()
    rays: tuple[np.ndarray, ...] = ()
    lineality: tuple[np.ndarray, ...] = ()
    empty: bool = False

    @property
    def directions(self) -> tuple[np.ndarray, ...]:
        """Recession directions: extreme rays and both signs of the lineality basis."""
        return self.rays + self.lineality + tuple(-d for d in self.lineality)

    @property
    def is_single_point(self) -> bool:
        return len(self.vertices) == 1 and not self.directions


@dataclass(frozen=True, eq=False)
class LagrangianHessians:
    H_min: np.ndarray
    H_max_yy: np.ndarray

    def blocks(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xx, yx, yy) blocks of H_min, yx having shape (m, n)."""
        H = self.H_min
        return H[:n, :n], H[n:, :n], H[n:, n:]


def _side_gradient(prob: MinimaxProblem, p: Point, side: SIDE) -> np.ndarray:
    g = gradient(prob.f, p)
    return g[: prob.n] if side == "min" else g[prob.n :]


def multiplier_set(
    prob: MinimaxProblem, p: Point, side: SIDE, tol: float = 1e-8
) -> MultiplierPolyhedron:
    """Λ_min = {α : ∇_x f + ∇φᵀα = 0, α >= 0 on active inequalities} or
    Λ_max = {β : −∇_y f + ∇ψᵀβ = 0, β >= 0 on active inequalities}."""
    cs = prob.system(side)
    z = prob.block(p, side)
    active = active_set(cs, z, tol)
    equalities = tuple(i for i, c in enumerate(cs.constraints) if c.kind == "eq")
    indices = active + equalities
    matrix = cs.gradients(z, indices).T.reshape(cs.dim, len(indices))
    grad = _side_gradient(prob, p, side)
    rhs = -grad if side == "min" else grad
    bounds = [(0.0, None)] * len(active) + [(None, None)] * len(equalities)
    result = lp_phase_one(matrix, rhs, None, None, bounds, tol=tol)
    logging.debug(
        f"kkt: multiplier_set: {side} side, {len(indices)} multipliers, "
        f"{'empty' if result.point is None else 'nonempty'} (residual {result.residual:.3e})"
    )
    return MultiplierPolyhedron(
        matrix=matrix,
        rhs=rhs,
        sign_constrained=tuple(range(len(active))),
        free=tuple(range(len(active), len(indices))),
        side=side,
        indices=indices,
        num_constraints=len(cs.constraints),
        point=result.point,
        residual=result.residual,
    )


def critical_cone(prob: MinimaxProblem, p: Point, side: SIDE, tol: float = 1e-8) -> PolyhedralCone:
    """C_min = {u ∈ T_X(x̄) : ∇_x f u = 0}, C_max = {h ∈ T_Y(ȳ) : ∇_y f h = 0}."""
    cs = prob.system(side)
    return tangent_cone(cs, prob.block(p, side), tol).with_rows(eq=_side_gradient(prob, p, side))


def vertices(mp: MultiplierPolyhedron, max_components: int = MAX_MULTIPLIER_COMPONENTS) -> VertexSet:
    """Vertices of Λ ∩ L^⊥ (L the lineality space of Λ) by active-set enumeration,
    together with the extreme rays and lineality of the recession cone."""
    k = mp.size
    if k > max_components:
        raise DimensionTooLarge(f"{k} multiplier components exceed {max_components} for enumeration")
    if mp.is_empty:
        return VertexSet(empty=True)
    if k == 0:
        return VertexSet(vertices=(np.zeros(0),))

    S = list(mp.sign_constrained)
    selector = np.eye(k)[S]
    lineality = scipy.linalg.null_space(np.vstack([mp.matrix, selector]))
    scale = max(1.0, float(np.linalg.norm(mp.rhs)))

    found: list[np.ndarray] = []
    for size in range(len(S) + 1):
        for zeros in itertools.combinations(S, size):
            A = np.vstack([mp.matrix, np.eye(k)[list(zeros)], lineality.T])
            b = np.concatenate([mp.rhs, np.zeros(len(zeros) + lineality.shape[1])])
            if np.linalg.matrix_rank(A) < k:
                continue
            v = np.linalg.lstsq(A, b, rcond=None)[0]
            if np.linalg.norm(A @ v - b) > 1e-9 * scale:
                continue
            if np.any(v[S] < -1e-10):
                continue
            v = np.where(np.abs(v) < 1e-14, 0.0, v)
            if not any(np.allclose(v, u, atol=1e-10) for u in found):
                found.append(v)

    recession = PolyhedralCone(-selector, mp.matrix, k)
    rays = extreme_rays(recession, max_dim=max_components)
    return VertexSet(tuple(found), rays.rays, rays.lineality)


def lagrangian_hessians(
    prob: MinimaxProblem,
    p: Point,
    alpha: Sequence[float] | None = None,
    beta: Sequence[float] | None = None,
) -> LagrangianHessians:
    """Hessians of L_min = f + φᵀα − ψᵀβ over (x, y) and of L_max = f − ψᵀβ over y.
    alpha and beta are full-length (one entry per constraint); zero entries are skipped."""
    n, m = prob.n, prob.m
    alpha = np.zeros(len(prob.x_constraints.constraints)) if alpha is None else np.asarray(alpha, float)
    beta = np.zeros(len(prob.y_constraints.constraints)) if beta is None else np.asarray(beta, float)
    if alpha.shape != (len(prob.x_constraints.constraints),):
        raise DimensionError(f"alpha has shape {alpha.shape}, one entry per x constraint expected")
    if beta.shape != (len(prob.y_constraints.constraints),):
        raise DimensionError(f"beta has shape {beta.shape}, one entry per y constraint expected")

    H = hessian(prob.f, p).copy()
    for a, c in zip(alpha, prob.x_constraints.constraints):
        if a != 0:
            H[:n, :n] += a * hessian(c.expr, Point(x=p.x))[:n, :n]
    for b, c in zip(beta, prob.y_constraints.constraints):
        if b != 0:
            H[n:, n:] -= b * hessian(c.expr, Point(y=p.y))[:m, :m]
    return LagrangianHessians(H_min=H, H_max_yy=H[n:, n:].copy())
