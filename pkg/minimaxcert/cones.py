from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg

from ._types import AXIS, INDICATOR_CASE, KIND
from .exception import (
    DimensionError,
    DimensionTooLarge,
    EmptyMultiplierSet,
    InfeasiblePoint,
    NumericalFailure,
)
from .exprcore import Expr, Point, evaluate, evaluate_batch, gradient, hessian, is_affine, variables

__all__ = [
    "Constraint",
    "ConstraintSystem",
    "PolyhedralCone",
    "RaySet",
    "IndicatorSecondSub",
    "NonlinearIndicatorData",
    "LPResult",
    "active_set",
    "tangent_cone",
    "membership",
    "extreme_rays",
    "sample_cone_directions",
    "lp_phase_one",
    "lp_feasible",
    "indicator_second_sub",
]

MAX_EXHAUSTIVE_DIM = 6
MAX_LP_VARIABLES = 32
MAX_LP_ROWS = 64


@dataclass(frozen=True)
class Constraint:
    expr: Expr
    kind: KIND = "le"

    def __post_init__(self) -> None:
        if self.kind not in ("le", "eq"):
            raise ValueError(f"constraint kind must be 'le' or 'eq', not {self.kind!r}")


@dataclass(frozen=True)
class ConstraintSystem:
    """Constraints g(z) <= 0 / g(z) = 0 over one block of variables.
    An empty system is the unconstrained whole space."""

    block: AXIS
    dim: int
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for i, c in enumerate(self.constraints):
            for axis, index in variables(c.expr):
                if axis != self.block:
                    raise DimensionError(
                        f"{self.block} constraint {i} references {axis}{index} of the other block"
                    )
                if index > self.dim:
                    raise DimensionError(
                        f"{self.block} constraint {i} references {axis}{index} beyond {self.dim}"
                    )

    @property
    def p1(self) -> int:
        return sum(1 for c in self.constraints if c.kind == "le")

    @property
    def p2(self) -> int:
        return sum(1 for c in self.constraints if c.kind == "eq")

    @property
    def is_unconstrained(self) -> bool:
        return not self.constraints

    @property
    def is_affine(self) -> bool:
        return all(is_affine(c.expr) for c in self.constraints)

    def point(self, z: Sequence[float]) -> Point:
        return Point(x=tuple(z)) if self.block == "x" else Point(y=tuple(z))

    def _check(self, z: Sequence[float]) -> None:
        if len(z) != self.dim:
            raise DimensionError(f"{self.block} point has length {len(z)}, expected {self.dim}")

    def values(self, z: Sequence[float]) -> np.ndarray:
        self._check(z)
        p = self.point(z)
        return np.array([evaluate(c.expr, p) for c in self.constraints])

    def gradients(self, z: Sequence[float], indices: Sequence[int] | None = None) -> np.ndarray:
        self._check(z)
        p = self.point(z)
        indices = range(len(self.constraints)) if indices is None else indices
        rows = [gradient(self.constraints[i].expr, p) for i in indices]
        return np.array(rows).reshape(len(rows), self.dim)

    def hessians(self, z: Sequence[float]) -> tuple[np.ndarray, ...]:
        self._check(z)
        p = self.point(z)
        return tuple(hessian(c.expr, p) for c in self.constraints)

    def feasible_mask(self, Z: np.ndarray, tol: float) -> np.ndarray:
        """Row-wise feasibility of an array of block points Z with shape (..., dim)."""
        Z = np.asarray(Z, dtype=float)
        mask = np.ones(Z.shape[:-1], dtype=bool)
        empty = np.zeros(Z.shape[:-1] + (0,))
        for c in self.constraints:
            if self.block == "x":
                g = evaluate_batch(c.expr, Z, empty)
            else:
                g = evaluate_batch(c.expr, empty, Z)
            mask &= (g <= tol) if c.kind == "le" else (np.abs(g) <= tol)
        return mask


def _as_rows(A: np.ndarray | Sequence | None, dim: int) -> np.ndarray:
    if A is None:
        return np.zeros((0, dim))
    A = np.asarray(A, dtype=float)
    if A.ndim == 2 and A.shape[1] == dim:
        return A
    if A.size == 0:
        return np.zeros((0, dim))
    return np.atleast_2d(A).reshape(-1, dim)


@dataclass(frozen=True, eq=False)
class PolyhedralCone:
    """{w : A_le w <= 0, A_eq w = 0} in R^dim."""

    A_le: np.ndarray
    A_eq: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "A_le", _as_rows(self.A_le, self.dim))
        object.__setattr__(self, "A_eq", _as_rows(self.A_eq, self.dim))

    @classmethod
    def full(cls, dim: int) -> PolyhedralCone:
        return cls(np.zeros((0, dim)), np.zeros((0, dim)), dim)

    def with_rows(self, le: np.ndarray | None = None, eq: np.ndarray | None = None) -> PolyhedralCone:
        return PolyhedralCone(
            np.vstack([self.A_le, _as_rows(le, self.dim)]),
            np.vstack([self.A_eq, _as_rows(eq, self.dim)]),
            self.dim,
        )

    @property
    def is_full_space(self) -> bool:
        return not np.any(self.A_le) and not np.any(self.A_eq)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(dim={self.dim}, le={self.A_le.tolist()}, eq={self.A_eq.tolist()})"


@dataclass(frozen=True, eq=False)
class RaySet:
    rays: tuple[np.ndarray, ...]
    lineality: tuple[np.ndarray, ...]
    exhaustive: bool = True

    @property
    def generators(self) -> tuple[np.ndarray, ...]:
        """Rays plus both signs of every lineality vector: the cone is their conic hull."""
        return self.rays + self.lineality + tuple(-v for v in self.lineality)

    @property
    def is_zero(self) -> bool:
        return not self.rays and not self.lineality

    @property
    def is_subspace(self) -> bool:
        return not self.rays


@dataclass(frozen=True)
class IndicatorSecondSub:
    value: float = 0.0
    infinite: bool = False

    @property
    def total(self) -> float:
        return math.inf if self.infinite else self.value


@dataclass(frozen=True, eq=False)
class NonlinearIndicatorData:
    """Data for a set {z : g(z) in Σ} with polyhedral Σ: the tangent cone at z̄, the constraint
    Hessians at z̄ and the multiplier vertices λ (one entry per constraint, v̄ = ∇g(z̄)ᵀλ)."""

    cone: PolyhedralCone
    hessians: tuple[np.ndarray, ...]
    multipliers: tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class LPResult:
    point: np.ndarray | None
    residual: float
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.point is not None


# Active sets and tangent cones ------------------------------------------------------------


def active_set(cs: ConstraintSystem, z: Sequence[float], tol: float = 1e-8) -> tuple[int, ...]:
    """0-based positions of the inequality constraints with |g_i(z)| <= tol."""
    values = cs.values(z)
    active = []
    for i, (c, v) in enumerate(zip(cs.constraints, values)):
        violation = v if c.kind == "le" else abs(v)
        if violation > tol:
            raise InfeasiblePoint(i, float(violation), cs.block)
        if c.kind == "le" and abs(v) <= tol:
            active.append(i)
    return tuple(active)


def tangent_cone(cs: ConstraintSystem, z: Sequence[float], tol: float = 1e-8) -> PolyhedralCone:
    """Linearized tangent cone: ∇g_i(z)ᵀw <= 0 for active inequalities, = 0 for equalities."""
    active = active_set(cs, z, tol)
    equalities = [i for i, c in enumerate(cs.constraints) if c.kind == "eq"]
    return PolyhedralCone(cs.gradients(z, active), cs.gradients(z, equalities), cs.dim)


def _unit_rows(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0
    return A[keep] / norms[keep, None]


def membership(k: PolyhedralCone, w: Sequence[float], tol: float = 1e-9) -> bool:
    w = np.asarray(w, dtype=float)
    if w.shape != (k.dim,):
        raise DimensionError(f"direction has shape {w.shape}, cone has dim {k.dim}")
    scale = tol * np.linalg.norm(w)
    le = _unit_rows(k.A_le) @ w
    eq = _unit_rows(k.A_eq) @ w
    return bool(np.all(le <= scale) and np.all(np.abs(eq) <= scale))


# Extreme rays by double description ---------------------------------------------------------


def _dedupe(vectors: list[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vectors:
        norm = np.linalg.norm(v)
        if norm <= tol:
            continue
        v = v / norm
        if not any(np.linalg.norm(v - u) <= 1e-7 for u in out):
            out.append(v)
    return out


def _zero_set(r: np.ndarray, processed: list[np.ndarray], tol: float) -> frozenset[int]:
    return frozenset(i for i, a in enumerate(processed) if abs(a @ r) <= tol)


def extreme_rays(k: PolyhedralCone, max_dim: int = MAX_EXHAUSTIVE_DIM, tol: float = 1e-10) -> RaySet:
    """Complete extreme rays and a lineality basis, adding one half-space at a time
    (equalities enter as two opposite half-spaces)."""
    if k.dim > max_dim:
        raise DimensionTooLarge(f"cone of dimension {k.dim} exceeds {max_dim} for enumeration")
    le = _unit_rows(k.A_le)
    eq = _unit_rows(k.A_eq)
    halfspaces = list(le) + [s * b for b in eq for s in (1.0, -1.0)]

    lineality: list[np.ndarray] = list(np.eye(k.dim))
    rays: list[np.ndarray] = []
    processed: list[np.ndarray] = []
    for a in halfspaces:
        on_lineality = [a @ v for v in lineality]
        j = int(np.argmax(np.abs(on_lineality))) if lineality else -1
        if j >= 0 and abs(on_lineality[j]) > tol:
            pivot = lineality.pop(j)
            s = a @ pivot
            if s > 0:
                pivot, s = -pivot, -s
            lineality = [v - (a @ v) / s * pivot for v in lineality]
            rays = [r - (a @ r) / s * pivot for r in rays]
            rays.append(pivot)
        else:
            values = [a @ r for r in rays]
            keep = [r for r, v in zip(rays, values) if v <= tol]
            pos = [(r, v) for r, v in zip(rays, values) if v > tol]
            neg = [(r, v) for r, v in zip(rays, values) if v < -tol]
            pointed_dim = k.dim - len(lineality)
            zero_sets = [_zero_set(r, processed, tol * 100) for r in rays]
            for (rp, vp), (rn, vn) in itertools.product(pos, neg):
                common = _zero_set(rp, processed, tol * 100) & _zero_set(rn, processed, tol * 100)
                rank = np.linalg.matrix_rank(np.array([processed[i] for i in common])) if common else 0
                if rank != pointed_dim - 2:
                    continue
                others = [
                    z for r, z in zip(rays, zero_sets) if r is not rp and r is not rn
                ]
                if any(common <= z for z in others):
                    continue
                keep.append(vp * rn - vn * rp)
            rays = keep
        processed.append(a)
        rays = _dedupe(rays)

    basis: list[np.ndarray] = []
    if lineality:
        L = scipy.linalg.orth(np.array(lineality).T)
        basis = [L[:, i] for i in range(L.shape[1])]
        P = L @ L.T
        rays = _dedupe([r - P @ r for r in rays])
    logging.debug(f"cones: extreme_rays: {len(rays)} rays, lineality {len(basis)} in R^{k.dim}")
    return RaySet(tuple(rays), tuple(basis), exhaustive=True)


def sample_cone_directions(
    k: PolyhedralCone, count: int, seed: int = 0, max_iter: int = 200
) -> list[np.ndarray]:
    """Seeded unit directions of the cone: standard normal draws pushed into the cone by
    alternating projections onto its half-spaces and hyperplanes, then normalized."""
    if k.dim <= MAX_EXHAUSTIVE_DIM and extreme_rays(k).is_zero:
        return []
    rng = np.random.default_rng(seed)
    le = _unit_rows(k.A_le)
    eq = _unit_rows(k.A_eq)
    out: list[np.ndarray] = []
    attempts = 0
    zeros_in_a_row = 0
    while len(out) < count and attempts < 20 * count:
        attempts += 1
        w = rng.standard_normal(k.dim)
        for _ in range(max_iter):
            for b in eq:
                w = w - (b @ w) * b
            for a in le:
                v = a @ w
                if v > 0:
                    w = w - v * a
            if membership(k, w, 1e-12):
                break
        norm = np.linalg.norm(w)
        if norm <= 1e-9:
            zeros_in_a_row += 1
            if zeros_in_a_row >= 64:
                break  # only the zero vector keeps coming back
            continue
        zeros_in_a_row = 0
        w = w / norm
        if membership(k, w, 1e-9):
            out.append(w)
    if len(out) < count:
        logging.info(f"cones: sample_cone_directions: {len(out)} of {count} samples found")
    return out


# Phase-one simplex ----------------------------------------------------------------------------


def _standard_form(
    A_eq: np.ndarray,
    b_eq: np.ndarray,
    A_le: np.ndarray,
    b_le: np.ndarray,
    bounds: Sequence[tuple[float | None, float | None]],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Rewrite as M s = r, s >= 0 with v = c0 + T s[:K] recovering the original variables."""
    k = len(bounds)
    columns: list[np.ndarray] = []
    c0 = np.zeros(k)
    upper_rows: list[tuple[int, float]] = []
    for i, (lo, hi) in enumerate(bounds):
        e = np.zeros(k)
        e[i] = 1.0
        if lo is not None:
            c0[i] = lo
            columns.append(e)
            if hi is not None:
                upper_rows.append((len(columns) - 1, hi - lo))
        elif hi is not None:
            c0[i] = hi
            columns.append(-e)
        else:
            columns.append(e)
            columns.append(-e)
    T = np.array(columns).T.reshape(k, len(columns))
    K = T.shape[1]

    E = A_eq @ T
    r_eq = b_eq - A_eq @ c0
    U = np.zeros((len(upper_rows), K))
    r_up = np.zeros(len(upper_rows))
    for row, (col, limit) in enumerate(upper_rows):
        U[row, col] = 1.0
        r_up[row] = limit
    L = np.vstack([A_le @ T, U])
    r_le = np.concatenate([b_le - A_le @ c0, r_up])

    n_le = L.shape[0]
    M = np.block(
        [
            [E, np.zeros((E.shape[0], n_le))],
            [L, np.eye(n_le)],
        ]
    )
    r = np.concatenate([r_eq, r_le])
    return M, r, T, c0


def lp_phase_one(
    A_eq: np.ndarray | Sequence | None,
    b_eq: np.ndarray | Sequence | None,
    A_le: np.ndarray | Sequence | None,
    b_le: np.ndarray | Sequence | None,
    bounds: Sequence[tuple[float | None, float | None]] | None = None,
    tol: float = 1e-9,
) -> LPResult:
    """Phase-one simplex with Bland's rule on a dense tableau.
    Variables default to v >= 0; pass (None, None) bounds for free variables."""
    if bounds is None:
        k = max(
            np.asarray(A_eq).shape[-1] if A_eq is not None and np.size(A_eq) else 0,
            np.asarray(A_le).shape[-1] if A_le is not None and np.size(A_le) else 0,
        )
        bounds = [(0.0, None)] * k
    k = len(bounds)
    A_eq = _as_rows(A_eq, k)
    A_le = _as_rows(A_le, k)
    b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).reshape(-1)
    b_le = np.asarray(b_le if b_le is not None else [], dtype=float).reshape(-1)
    if k > MAX_LP_VARIABLES or A_eq.shape[0] + A_le.shape[0] > MAX_LP_ROWS:
        raise DimensionTooLarge(f"LP with {k} variables and {A_eq.shape[0] + A_le.shape[0]} rows")
    if b_eq.shape[0] != A_eq.shape[0] or b_le.shape[0] != A_le.shape[0]:
        raise DimensionError("right-hand sides do not match the constraint rows")

    M, r, T, c0 = _standard_form(A_eq, b_eq, A_le, b_le, bounds)
    rows, cols = M.shape
    if rows == 0:
        return LPResult(c0 + T @ np.zeros(T.shape[1]), 0.0)
    flip = r < 0
    M[flip] *= -1
    r[flip] *= -1

    # tableau [M | I | r], artificials form the starting basis
    tableau = np.hstack([M, np.eye(rows), r[:, None]])
    basis = list(range(cols, cols + rows))
    cost = np.concatenate([np.zeros(cols), np.ones(rows), [0.0]])
    reduced = cost - tableau.sum(axis=0)  # last entry is minus the objective

    max_iter = 50 * (rows + cols)
    iterations = 0
    while True:
        entering = next((j for j in range(cols + rows) if reduced[j] < -tol), None)
        if entering is None:
            break
        column = tableau[:, entering]
        candidates = [
            (tableau[i, -1] / column[i], basis[i], i) for i in range(rows) if column[i] > tol
        ]
        if not candidates:
            break  # unbounded below cannot happen in phase one
        _, _, leave = min(candidates)
        tableau[leave] /= tableau[leave, entering]
        for i in range(rows):
            if i != leave and tableau[i, entering] != 0:
                tableau[i] -= tableau[i, entering] * tableau[leave]
        reduced -= reduced[entering] * tableau[leave]
        basis[leave] = entering
        iterations += 1
        if iterations > max_iter:
            raise NumericalFailure(f"phase-one simplex exceeded {max_iter} pivots")

    residual = float(max(0.0, -reduced[-1]))
    if residual > tol * max(1.0, float(np.abs(r).max())):
        return LPResult(None, residual, iterations)
    s = np.zeros(cols + rows)
    for i, j in enumerate(basis):
        s[j] = tableau[i, -1]
    point = c0 + T @ s[: T.shape[1]]
    return LPResult(point, residual, iterations)


def lp_feasible(
    A_eq: np.ndarray | Sequence | None,
    b_eq: np.ndarray | Sequence | None,
    A_le: np.ndarray | Sequence | None,
    b_le: np.ndarray | Sequence | None,
    bounds: Sequence[tuple[float | None, float | None]] | None = None,
) -> np.ndarray | None:
    """A point of {A_eq v = b_eq, A_le v <= b_le, bounds} or None when the set is empty."""
    return lp_phase_one(A_eq, b_eq, A_le, b_le, bounds).point


# Indicator second subderivatives -----------------------------------------------------------


Criticality = Union[np.ndarray, Sequence[float], Callable[[np.ndarray], float], None]


def _pairing(v_bar: Criticality, w: np.ndarray) -> float:
    if v_bar is None:
        return 0.0
    if callable(v_bar):
        return float(v_bar(w))
    return float(np.asarray(v_bar, dtype=float) @ w)


def indicator_second_sub(
    case: INDICATOR_CASE,
    data: PolyhedralCone | NonlinearIndicatorData | None,
    v_bar: Criticality,
    w: Sequence[float],
    tol: float = 1e-8,
) -> IndicatorSecondSub:
    """d²δ_S(z̄; v̄)(w) for the whole space, a convex polyhedral set (data: its tangent cone at z̄)
    or a set {g(z) in Σ} with polyhedral Σ (data: NonlinearIndicatorData).
    v̄ may be a vector or a sublinear function such as a subderivative d_yf(x̄,ȳ)."""
    w = np.asarray(w, dtype=float)
    scale = tol * max(1.0, float(np.linalg.norm(w)))
    critical = abs(_pairing(v_bar, w)) <= scale
    match case:
        case "whole_space":
            return IndicatorSecondSub(0.0, infinite=not critical)
        case "polyhedral":
            if not isinstance(data, PolyhedralCone):
                raise TypeError("polyhedral case needs the tangent cone as data")
            tangent = membership(data, w, tol)
            return IndicatorSecondSub(0.0, infinite=not (tangent and critical))
        case "nonlinear_polyhedral":
            if not isinstance(data, NonlinearIndicatorData):
                raise TypeError("nonlinear case needs NonlinearIndicatorData")
            if not data.multipliers:
                raise EmptyMultiplierSet("no multiplier vertex supplied for the indicator term")
            if not (membership(data.cone, w, tol) and critical):
                return IndicatorSecondSub(0.0, infinite=True)
            curvature = np.array([w @ H @ w for H in data.hessians])
            value = max(float(lam @ curvature) for lam in data.multipliers) if len(curvature) else 0.0
            return IndicatorSecondSub(value)
    raise ValueError(f"unknown indicator case {case!r}")
