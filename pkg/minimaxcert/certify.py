"""First- and second-order optimality checks for a candidate minimax point.

Every check returns a CheckOutcome. A verdict is `proved` when all quantifiers were
discharged exactly: linear conditions on the generators of a polyhedral cone, quadratic
conditions by enumerating the faces of the cone, multiplier quantifiers on the vertices
and recession directions of the multiplier sets. Anything decided on seeded random
directions is labelled `sampled`.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import scipy.linalg

from ._types import MODE, SIDE, VERDICT
from .cones import (
    MAX_EXHAUSTIVE_DIM,
    NonlinearIndicatorData,
    PolyhedralCone,
    RaySet,
    extreme_rays,
    indicator_second_sub,
    membership,
    sample_cone_directions,
    tangent_cone,
)
from .exception import (
    DimensionTooLarge,
    InconsistencyError,
    NonsmoothAtPoint,
    SeparationHypothesisFailed,
)
from .exprcore import (
    Point,
    hessian,
    kinks,
    second_subderivatives,
    separation_defect,
    subderivative,
    subderivatives,
)
from .kkt import (
    MinimaxProblem,
    MultiplierPolyhedron,
    VertexSet,
    critical_cone,
    multiplier_set,
    vertices,
)

__all__ = [
    "CertifyOptions",
    "Witness",
    "CheckOutcome",
    "CertificateReport",
    "check_first_order",
    "check_first_order_dual",
    "check_strict_first_order",
    "check_second_order_necessary",
    "check_second_order_sufficient",
    "schur_check",
    "check_nonsmooth_necessary",
    "check_nonsmooth_sufficient",
    "check_relaxed_necessary",
    "weak_sufficient_flag",
    "certify",
    "NECESSARY_PRIORITY",
]

MAX_FACE_GENERATORS = 14
NONSMOOTH_SAMPLES = 64
SEPARATION_PROBES = 8
_T_GRID = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 25)])
_SALTS = {"min": 11, "max": 23, "critical:min": 37, "critical:max": 41, "restricted": 53}

NECESSARY_PRIORITY = (
    "first_order_primal",
    "first_order_dual",
    "schur_necessary",
    "so_necessary_max",
    "so_necessary_joint",
    "nonsmooth_necessary_max",
    "nonsmooth_necessary_joint",
    "relaxed_necessary",
)

CONCLUSION_LINES = {
    "CERTIFIED": "CERTIFIED (sufficient conditions proved)",
    "REFUTED": "REFUTED (necessary condition fails: {})",
    "CONSISTENT": "CONSISTENT (necessary hold; sufficiency not established)",
    "INCONCLUSIVE": "INCONCLUSIVE ({})",
}


@dataclass(frozen=True)
class CertifyOptions:
    tol: float = 1e-8
    strict_tol: float = 1e-6
    activity_tol: float = 1e-8
    eig_tol: float = 1e-9
    samples: int = 512
    seed: int = 0
    numeric: bool = False
    max_exhaustive_dim: int = MAX_EXHAUSTIVE_DIM
    probe_scale: float = 10.0

    def __post_init__(self) -> None:
        for name in ("tol", "strict_tol", "activity_tol", "eig_tol", "probe_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.tol >= self.strict_tol:
            raise ValueError("tol must be smaller than strict_tol")


def _as_tuple(v: Any) -> tuple[float, ...] | None:
    if v is None:
        return None
    return tuple(float(a) + 0.0 for a in np.asarray(v, dtype=float).reshape(-1))


@dataclass(frozen=True)
class Witness:
    value: float
    u: tuple[float, ...] | None = None
    h: tuple[float, ...] | None = None
    alpha: tuple[float, ...] | None = None
    beta: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value) + 0.0)
        for name in ("u", "h", "alpha", "beta"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "u": None if self.u is None else list(self.u),
            "h": None if self.h is None else list(self.h),
            "alpha": None if self.alpha is None else list(self.alpha),
            "beta": None if self.beta is None else list(self.beta),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Witness:
        return cls(data["value"], data.get("u"), data.get("h"), data.get("alpha"), data.get("beta"))


@dataclass(frozen=True)
class CheckOutcome:
    verdict: VERDICT
    mode: MODE = "proved"
    witness: Witness | None = None
    note: str = ""
    margin: float | None = None

    def __post_init__(self) -> None:
        if self.verdict == "fails" and self.witness is None:
            raise ValueError("a failing check must carry a witness")

    @property
    def passed(self) -> bool:
        return self.verdict in ("holds", "vacuous")

    @property
    def conclusive(self) -> bool:
        return self.verdict != "inconclusive"

    @property
    def proved(self) -> bool:
        return self.mode == "proved"

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "note": self.note,
            "margin": self.margin,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CheckOutcome:
        witness = data.get("witness")
        return cls(
            data["verdict"],
            data["mode"],
            None if witness is None else Witness.from_dict(witness),
            data.get("note", ""),
            data.get("margin"),
        )

    def __str__(self) -> str:
        text = f"{self.verdict} ({self.mode})"
        if self.margin is not None:
            text += f" margin={self.margin:.6g}"
        if self.witness is not None:
            text += f" witness value={self.witness.value:.6g}"
            if self.witness.u is not None:
                text += f" u={list(self.witness.u)}"
            if self.witness.h is not None:
                text += f" h={list(self.witness.h)}"
        if self.note:
            text += f" [{self.note}]"
        return text


def _inconclusive(note: str) -> CheckOutcome:
    return CheckOutcome("inconclusive", "sampled", note=note)


Pair = tuple[CheckOutcome, CheckOutcome]


@dataclass(frozen=True)
class CertificateReport:
    first_order_primal: Pair
    first_order_dual: Pair
    strict_first_order: Pair
    so_necessary_max: CheckOutcome
    so_necessary_joint: CheckOutcome
    so_sufficient_max: CheckOutcome
    so_sufficient_joint: CheckOutcome
    schur_necessary: CheckOutcome
    schur_sufficient: CheckOutcome
    nonsmooth_necessary_max: CheckOutcome
    nonsmooth_necessary_joint: CheckOutcome
    nonsmooth_sufficient_max: CheckOutcome
    nonsmooth_sufficient_joint: CheckOutcome
    relaxed_necessary: CheckOutcome
    weak_sufficient_flag: CheckOutcome
    assumptions: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    conclusion: str = "INCONCLUSIVE"
    reason: str = ""

    _PAIRS = ("first_order_primal", "first_order_dual", "strict_first_order")
    _SINGLES = (
        "so_necessary_max",
        "so_necessary_joint",
        "so_sufficient_max",
        "so_sufficient_joint",
        "schur_necessary",
        "schur_sufficient",
        "nonsmooth_necessary_max",
        "nonsmooth_necessary_joint",
        "nonsmooth_sufficient_max",
        "nonsmooth_sufficient_joint",
        "relaxed_necessary",
        "weak_sufficient_flag",
    )

    @property
    def conclusion_line(self) -> str:
        return CONCLUSION_LINES[self.conclusion].format(self.reason)

    def outcomes(self, name: str) -> tuple[CheckOutcome, ...]:
        value = getattr(self, name)
        return value if isinstance(value, tuple) else (value,)

    def checks(self) -> list[tuple[str, CheckOutcome]]:
        """All outcomes in report order, pairs split into their x and y halves."""
        out = []
        for name in self._PAIRS:
            x, y = getattr(self, name)
            out += [(f"{name}.x", x), (f"{name}.y", y)]
        out += [(name, getattr(self, name)) for name in self._SINGLES]
        return out

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for name in self._PAIRS:
            data[name] = [o.to_dict() for o in getattr(self, name)]
        for name in self._SINGLES:
            data[name] = getattr(self, name).to_dict()
        data["assumptions"] = list(self.assumptions)
        data["notes"] = list(self.notes)
        data["conclusion"] = self.conclusion
        data["reason"] = self.reason
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CertificateReport:
        kwargs: dict[str, Any] = {}
        for name in cls._PAIRS:
            x, y = data[name]
            kwargs[name] = (CheckOutcome.from_dict(x), CheckOutcome.from_dict(y))
        for name in cls._SINGLES:
            kwargs[name] = CheckOutcome.from_dict(data[name])
        return cls(
            **kwargs,
            assumptions=tuple(data.get("assumptions", ())),
            notes=tuple(data.get("notes", ())),
            conclusion=data["conclusion"],
            reason=data.get("reason", ""),
        )


# Shared analysis of one (problem, point, options) triple ---------------------------------


@dataclass(frozen=True, eq=False)
class _MultiplierTerm:
    """w ↦ max over λ in Λ of ⟨λ, ∇²g(w,w)⟩, with one Hessian per multiplier variable."""

    hessians: tuple[np.ndarray, ...]
    vertex_set: VertexSet
    exact: bool
    indices: tuple[int, ...] = ()
    num_constraints: int = 0

    @property
    def vanishes(self) -> bool:
        return not any(np.any(H) for H in self.hessians)

    @property
    def single(self) -> bool:
        return self.exact and self.vertex_set.is_single_point

    @property
    def vertex(self) -> np.ndarray:
        return self.vertex_set.vertices[0]

    def full(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.num_constraints)
        out[list(self.indices)] = v
        return out

    def curvature(self, W: np.ndarray) -> np.ndarray:
        W = np.atleast_2d(W)
        if not self.hessians:
            return np.zeros((W.shape[0], 0))
        return np.stack([np.einsum("ij,jk,ik->i", W, H, W) for H in self.hessians], axis=1)

    def maximum(self, W: np.ndarray, tol: float, with_rays: bool = True) -> np.ndarray:
        """Max over the vertices; +inf where a recession direction pairs positively."""
        W = np.atleast_2d(W)
        if self.vanishes:
            return np.zeros(W.shape[0])
        c = self.curvature(W)
        values = np.max(np.stack([c @ v for v in self.vertex_set.vertices], axis=1), axis=1)
        if with_rays:
            for d in self.vertex_set.directions:
                values = np.where(c @ d > tol, math.inf, values)
        return values

    def probed_maximum(self, W: np.ndarray, scale: float) -> np.ndarray:
        """Max over the vertices and the probes vertex + scale·ray."""
        W = np.atleast_2d(W)
        if self.vanishes:
            return np.zeros(W.shape[0])
        c = self.curvature(W)
        points = list(self.vertex_set.vertices)
        points += [v + scale * d for v in self.vertex_set.vertices for d in self.vertex_set.directions]
        return np.max(np.stack([c @ v for v in points], axis=1), axis=1)


class _Analysis:
    """Lazily computed cones, rays, multipliers and samples for one candidate point."""

    def __init__(self, prob: MinimaxProblem, p: Point, opts: CertifyOptions) -> None:
        prob.check_point(p, opts.activity_tol)
        self.prob = prob
        self.p = p
        self.opts = opts
        self.n = prob.n
        self.m = prob.m
        self._memo: dict[Any, Any] = {}

    def _get(self, key: Any, factory: Callable[[], Any]) -> Any:
        if key not in self._memo:
            self._memo[key] = factory()
        return self._memo[key]

    @property
    def f_smooth(self) -> bool:
        return self._get("f_smooth", lambda: not kinks(self.prob.f, self.p))

    @property
    def smooth(self) -> bool:
        return self._get("smooth", lambda: self.prob.smooth_at(self.p))

    @property
    def hessian_f(self) -> np.ndarray:
        return self._get("hessian_f", lambda: hessian(self.prob.f, self.p))

    def embed(self, side: SIDE, W: np.ndarray) -> np.ndarray:
        W = np.atleast_2d(W)
        zeros = np.zeros((W.shape[0], self.m if side == "min" else self.n))
        return np.hstack([W, zeros] if side == "min" else [zeros, W])

    def cone(self, name: str) -> PolyhedralCone:
        """Tangent cone for name "min" or "max", critical cone for "critical:min" or "critical:max"."""

        def build() -> PolyhedralCone:
            if name.startswith("critical:"):
                side = name.split(":")[1]
                return critical_cone(self.prob, self.p, side, self.opts.activity_tol)
            cs = self.prob.system(name)  # type: ignore[arg-type]
            return tangent_cone(cs, self.prob.block(self.p, name), self.opts.activity_tol)  # type: ignore[arg-type]

        return self._get(("cone", name), build)

    def rays(self, name: str, cone: PolyhedralCone | None = None) -> RaySet | None:
        cone = self.cone(name) if cone is None else cone

        def build() -> RaySet | None:
            if cone.dim > self.opts.max_exhaustive_dim:
                logging.info(f"certify: rays: {name} cone of dimension {cone.dim}, sampling instead")
                return None
            try:
                return extreme_rays(cone, self.opts.max_exhaustive_dim)
            except DimensionTooLarge as e:
                logging.info(f"certify: rays: {name}: {e}, sampling instead")
                return None

        return self._get(("rays", name), build)

    def samples(self, name: str, count: int, cone: PolyhedralCone | None = None) -> np.ndarray:
        cone = self.cone(name) if cone is None else cone
        salt = _SALTS.get(name, 97)

        def build() -> np.ndarray:
            found = sample_cone_directions(cone, count, self.opts.seed + salt)
            return np.array(found).reshape(len(found), cone.dim)

        return self._get(("samples", name, count), build)

    def multipliers(self, side: SIDE) -> MultiplierPolyhedron:
        return self._get(
            ("multipliers", side),
            lambda: multiplier_set(self.prob, self.p, side, self.opts.activity_tol),
        )

    def term(self, side: SIDE) -> _MultiplierTerm:
        def build() -> _MultiplierTerm:
            mp = self.multipliers(side)
            cs = self.prob.system(side)
            z = self.prob.block(self.p, side)
            all_hessians = cs.hessians(z) if cs.constraints else ()
            hessians = tuple(all_hessians[i] for i in mp.indices)
            try:
                vs = vertices(mp)
                exact = True
            except DimensionTooLarge as e:
                logging.info(f"certify: term: {side} multipliers: {e}, using one feasible point")
                vs = VertexSet(vertices=(mp.point,))
                exact = False
            return _MultiplierTerm(hessians, vs, exact, mp.indices, mp.num_constraints)

        return self._get(("term", side), build)

    def directions(self, name: str, count: int | None = None) -> tuple[np.ndarray, bool]:
        """Generators plus samples of a cone; exact is True when generators alone were used."""
        rays = self.rays(name)
        count = self.opts.samples if count is None else count
        if rays is not None:
            gens = np.array(rays.generators).reshape(len(rays.generators), self.cone(name).dim)
            if _span_dim(rays) <= 1:
                return gens, True
            return np.vstack([gens, self.samples(name, count)]), False
        return self.samples(name, count), False


@functools.lru_cache(maxsize=16)
def _analysis(prob: MinimaxProblem, p: Point, opts: CertifyOptions) -> _Analysis:
    return _Analysis(prob, p, opts)


def _span_dim(rays: RaySet) -> int:
    gens = rays.generators
    if not gens:
        return 0
    return int(np.linalg.matrix_rank(np.array(gens)))


def _quadratic(W: np.ndarray, H: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", W, H, W)


def _face_min(H: np.ndarray, cone: PolyhedralCone, rays: RaySet) -> tuple[float, np.ndarray]:
    """Exact min of wᵀHw over unit w in the cone: the minimizer is an eigenvector of H
    restricted to the span of the face containing it."""
    gens = [g / np.linalg.norm(g) for g in rays.generators]
    if len(gens) > MAX_FACE_GENERATORS:
        raise DimensionTooLarge(f"{len(gens)} cone generators exceed {MAX_FACE_GENERATORS}")
    candidates = list(gens)
    for size in range(2, min(cone.dim, len(gens)) + 1):
        for subset in itertools.combinations(gens, size):
            M = np.column_stack(subset)
            if np.linalg.matrix_rank(M) < size:
                continue
            Q = scipy.linalg.orth(M)
            _, vecs = np.linalg.eigh(Q.T @ H @ Q)
            for v in vecs.T:
                w = Q @ v
                for s in (1.0, -1.0):
                    if membership(cone, s * w, 1e-9):
                        candidates.append(s * w)
    W = np.array(candidates)
    values = _quadratic(W, H)
    i = int(np.argmin(values))
    return float(values[i]), W[i]


def _quadratic_min(
    a: _Analysis, H: np.ndarray, name: str, cone: PolyhedralCone | None = None
) -> tuple[float, np.ndarray | None, bool]:
    """(min of wᵀHw over unit w in the cone, minimizer, exact). inf and None for the zero cone."""
    cone = a.cone(name) if cone is None else cone
    rays = a.rays(name, cone)
    extra = np.zeros((0, cone.dim))
    if rays is not None:
        if rays.is_zero:
            return math.inf, None, True
        try:
            value, w = _face_min(H, cone, rays)
            return value, w, True
        except DimensionTooLarge as e:
            logging.info(f"certify: quadratic_min: {e}, sampling instead")
        extra = np.array(rays.generators).reshape(-1, cone.dim)
    W = np.vstack([extra, a.samples(name, a.opts.samples, cone)])
    if len(W) == 0:
        return math.inf, None, False
    values = _quadratic(W, H)
    i = int(np.argmin(values))
    return float(values[i]), W[i], False


def _mode(exact: bool) -> MODE:
    return "proved" if exact else "sampled"


# First order -----------------------------------------------------------------------------


def _first_order_side(a: _Analysis, side: SIDE, strict: bool) -> CheckOutcome:
    opts = a.opts
    rays = a.rays(side)
    if rays is not None and rays.is_zero:
        return CheckOutcome("vacuous", "proved", note="tangent cone is {0}")
    if rays is not None and (a.f_smooth or _span_dim(rays) <= 1):
        W = np.array(rays.generators).reshape(-1, a.cone(side).dim)
        exact = True
    else:
        W, _ = a.directions(side)
        exact = False
    if len(W) == 0:
        return CheckOutcome("vacuous", "sampled", note="no tangent direction found")

    full = a.embed(side, W)
    if opts.numeric:
        d = np.array([subderivative(a.prob.f, a.p, w, numeric=True).value for w in full])
        exact = False
    else:
        d = subderivatives(a.prob.f, a.p, full)
    s = d if side == "min" else -d  # s >= threshold is the condition on both sides
    threshold = opts.strict_tol if strict else -opts.tol
    i = int(np.argmin(s))
    label = "d_x f(u)" if side == "min" else "d_y f(h)"
    if s[i] >= threshold:
        return CheckOutcome("holds", _mode(exact), margin=float(s[i]) if strict else None)
    witness = Witness(d[i], u=W[i] if side == "min" else None, h=W[i] if side == "max" else None)
    note = f"{label} = {d[i]:.6g} on a tangent direction"
    return CheckOutcome("fails", "sampled" if opts.numeric else "proved", witness, note)


def check_first_order(prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None) -> Pair:
    """d_x f(u) >= 0 on T_X(x̄) and d_y f(h) <= 0 on T_Y(ȳ)."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _first_order_side(a, "min", False), _first_order_side(a, "max", False)


def check_strict_first_order(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> Pair:
    """d_x f(u) > 0 on T_X(x̄)\\{0} and d_y f(h) < 0 on T_Y(ȳ)\\{0}: a local Nash equilibrium."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _first_order_side(a, "min", True), _first_order_side(a, "max", True)


def _dual_side(a: _Analysis, side: SIDE) -> CheckOutcome:
    if not a.smooth:
        return _inconclusive("f or an active constraint is not differentiable at the point")
    mp = a.multipliers(side)
    name = "alpha" if side == "min" else "beta"
    if mp.is_empty:
        witness = Witness(mp.residual)
        return CheckOutcome("fails", "proved", witness, f"multiplier set empty ({name})")
    witness = Witness(0.0, **{name: mp.expand(mp.point)})
    return CheckOutcome("holds", "proved", witness, f"{mp.size} multiplier component(s)")


def check_first_order_dual(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> Pair:
    """0 ∈ ∇_x f + N_X(x̄) and 0 ∈ −∇_y f + N_Y(ȳ), decided by multiplier nonemptiness."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _dual_side(a, "min"), _dual_side(a, "max")


# Smooth second order ---------------------------------------------------------------------


def _smooth_prerequisite(a: _Analysis) -> str | None:
    if not a.smooth:
        return "f or a constraint is not twice differentiable at the point"
    if not a.prob.is_unconstrained and not a.prob.mscq:
        return "MSCQ not asserted for nonlinear constraints"
    if a.multipliers("min").is_empty or a.multipliers("max").is_empty:
        return "multiplier set empty: first-order condition fails"
    return None


def _lagrangian(a: _Analysis) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Hessian of L_min at the single multipliers (or f alone where the terms vanish)."""
    H = a.hessian_f.copy()
    n = a.n
    alpha = beta = None
    tx, ty = a.term("min"), a.term("max")
    if not tx.vanishes:
        alpha = tx.vertex
        H[:n, :n] += sum(v * Hc for v, Hc in zip(alpha, tx.hessians))
    if not ty.vanishes:
        beta = ty.vertex
        H[n:, n:] -= sum(v * Hc for v, Hc in zip(beta, ty.hessians))
    return H, (None if alpha is None else tx.full(alpha)), (None if beta is None else ty.full(beta))


def _exact_terms(a: _Analysis) -> bool:
    tx, ty = a.term("min"), a.term("max")
    return (tx.vanishes or tx.single) and (ty.vanishes or ty.single)


def _max_side(a: _Analysis, strict: bool) -> CheckOutcome:
    reason = _smooth_prerequisite(a)
    if reason:
        return _inconclusive(reason)
    opts = a.opts
    n = a.n
    ty = a.term("max")
    threshold = -opts.strict_tol if strict else opts.tol
    if ty.vanishes or ty.single:
        H, _, beta = _lagrangian(a)
        value, h, exact = _quadratic_min(a, -H[n:, n:], "critical:max")
        if h is None:
            return CheckOutcome("vacuous", _mode(exact), note="C_max = {0}")
        worst = -value
        if worst <= threshold:
            return CheckOutcome("holds", _mode(exact), margin=-worst if strict else None)
        return CheckOutcome("fails", "proved", Witness(worst, h=h, beta=beta), "hᵀ∇²_yy L_max h")

    W, exact = a.directions("critical:max")
    if len(W) == 0:
        return CheckOutcome("vacuous", "sampled", note="no critical direction found")
    values = _quadratic(W, a.hessian_f[n:, n:]) - ty.maximum(W, opts.tol)
    i = int(np.argmax(values))
    if values[i] <= threshold:
        return CheckOutcome("holds", "sampled", margin=float(-values[i]) if strict else None)
    # without every vertex the max over β is only a lower bound
    return CheckOutcome(
        "fails", _mode(ty.exact), Witness(values[i], h=W[i]), "min over β of hᵀ∇²_yy L_max h"
    )


def _subspace_sup(
    a: _Analysis, H: np.ndarray, basis: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """sup over h in span(basis) of (u,h)ᵀH(u,h) as uᵀSu on {Ku = 0} (+inf off it),
    maximizer h = hmap·u. None when the sup is +inf for every u."""
    n = a.n
    Hxx, Hyx, Hyy = H[:n, :n], H[n:, :n], H[n:, n:]
    if basis.shape[1] == 0:
        return Hxx, np.zeros((0, n)), np.zeros((a.m, n))
    Y = basis.T @ Hyy @ basis
    Cx = basis.T @ Hyx
    evals, evecs = np.linalg.eigh(Y)
    if evals.max() > a.opts.eig_tol:
        return None
    null = np.abs(evals) <= a.opts.eig_tol
    K = evecs[:, null].T @ Cx
    inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, evals))
    Yp = (evecs * inv) @ evecs.T
    S = Hxx - Cx.T @ Yp @ Cx
    return S, K, -basis @ Yp @ Cx


def _joint_exact(a: _Analysis, strict: bool, rays_max: RaySet) -> CheckOutcome:
    opts = a.opts
    H, alpha, beta = _lagrangian(a)
    basis = np.array(rays_max.lineality).reshape(len(rays_max.lineality), a.m).T
    sup = _subspace_sup(a, H, basis)
    if sup is None:
        return CheckOutcome("holds", "proved", note="sup over h is unbounded")
    S, K, hmap = sup
    restricted = a.cone("critical:min").with_rows(eq=K)
    value, u, exact = _quadratic_min(a, S, "restricted", restricted)
    if u is None:
        return CheckOutcome("holds", _mode(exact), note="sup over h is unbounded for every critical u")
    threshold = opts.strict_tol if strict else -opts.tol
    if value >= threshold:
        return CheckOutcome("holds", _mode(exact), margin=value if strict else None)
    witness = Witness(value, u=u, h=hmap @ u, alpha=alpha, beta=beta)
    return CheckOutcome("fails", "proved", witness, "sup over h of ∇²L_min((u,h),(u,h))")


def _best_h(
    a0: float, Hyx_u: np.ndarray, G: np.ndarray, curvature: np.ndarray, eig_tol: float
) -> tuple[float, np.ndarray | None]:
    """max over t >= 0 and rows g of G of a0 + 2t·gᵀHyx u + t²·curvature(g)."""
    best, best_h = a0, None
    if len(G) == 0:
        return best, best_h
    b = G @ Hyx_u
    for g, bi, c in zip(G, b, curvature):
        if c > eig_tol or (abs(c) <= eig_tol and bi > eig_tol):
            return math.inf, g
        if c < -eig_tol and np.isfinite(c):
            t = max(0.0, -bi / c)
            value = a0 + 2 * bi * t + c * t * t
            if value > best:
                best, best_h = value, t * g
    return best, best_h


def _joint_sampled(a: _Analysis, strict: bool, probe: bool) -> CheckOutcome:
    opts = a.opts
    n = a.n
    H = a.hessian_f
    tx, ty = a.term("min"), a.term("max")
    U, _ = a.directions("critical:min")
    G, _ = a.directions("critical:max", NONSMOOTH_SAMPLES)
    if len(U) == 0:
        return CheckOutcome("vacuous", "sampled", note="no critical u found")
    a0 = _quadratic(U, H[:n, :n]) + tx.maximum(U, opts.tol)
    beta_term = ty.probed_maximum(G, opts.probe_scale) if probe else ty.maximum(G, opts.tol, False)
    curvature = _quadratic(G, H[n:, n:]) - beta_term if len(G) else np.zeros(0)
    threshold = opts.strict_tol if strict else -opts.tol
    worst, worst_u, worst_h = math.inf, None, None
    for u, base in zip(U, a0):
        best, h = _best_h(base, H[n:, :n] @ u, G, curvature, opts.eig_tol)
        if best < worst:
            worst, worst_u, worst_h = best, u, h
    if worst >= threshold:
        return CheckOutcome("holds", "sampled", margin=worst if strict and np.isfinite(worst) else None)
    h = np.zeros(a.m) if worst_h is None else worst_h
    return CheckOutcome("fails", "sampled", Witness(worst, u=worst_u, h=h), "best sampled h")


def _joint(a: _Analysis, strict: bool) -> CheckOutcome:
    reason = _smooth_prerequisite(a)
    if reason:
        return _inconclusive(reason)
    rays_min = a.rays("critical:min")
    if rays_min is not None and rays_min.is_zero:
        return CheckOutcome("vacuous", "proved", note="C_min = {0}")
    rays_max = a.rays("critical:max")
    if _exact_terms(a) and rays_max is not None and rays_max.is_subspace:
        return _joint_exact(a, strict, rays_max)
    outcome = _joint_sampled(a, strict, probe=False)
    if a.term("max").vertex_set.directions:
        probed = _joint_sampled(a, strict, probe=True)
        if probed.verdict != outcome.verdict:
            return _inconclusive("inconclusive-unbounded: verdict changes along a multiplier ray")
    return outcome


def check_second_order_necessary(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> Pair:
    """(max side, joint): hᵀ∇²_yy L_max h <= 0 on C_max for some β, and for every u in C_min
    some h in C_max and α with ∇²L_min((u,h),(u,h)) >= 0 for all β."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _max_side(a, strict=False), _joint(a, strict=False)


def check_second_order_sufficient(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> Pair:
    """Strict versions of check_second_order_necessary on C_max\\{0} and C_min\\{0}."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _max_side(a, strict=True), _joint(a, strict=True)


def weak_sufficient_flag(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> CheckOutcome:
    """hᵀ∇²_yy L_max h < 0 on C_max\\{0} for some β. When it holds, local minimax and calm
    local minimax coincide at the point."""
    a = _analysis(prob, p, opts or CertifyOptions())
    outcome = _max_side(a, strict=True)
    if outcome.passed:
        return CheckOutcome(
            outcome.verdict,
            outcome.mode,
            margin=outcome.margin,
            note="local minimax ⇔ calm local minimax at this point",
        )
    return outcome


def schur_check(prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None) -> Pair:
    """(sufficient, necessary) Schur complement test of ∇²L_min with respect to its yy block,
    restricted to C_max (a subspace) and C_min."""
    a = _analysis(prob, p, opts or CertifyOptions())
    opts = a.opts
    reason = _smooth_prerequisite(a)
    if reason is None and not _exact_terms(a):
        reason = "multiplier set is not a single point"
    rays_max = a.rays("critical:max") if reason is None else None
    if reason is None and (rays_max is None or not rays_max.is_subspace):
        reason = "C_max is not a subspace"
    if reason is None:
        H, alpha, beta = _lagrangian(a)
        basis = np.array(rays_max.lineality).reshape(len(rays_max.lineality), a.m).T
        Y = basis.T @ H[a.n :, a.n :] @ basis
        if basis.shape[1] and np.linalg.eigvalsh(Y).max() > -opts.eig_tol:
            reason = "yy-block not negative definite"
    if reason is not None:
        return _inconclusive(reason), _inconclusive(reason)

    S, _, hmap = _subspace_sup(a, H, basis)  # type: ignore[misc]
    value, u, exact = _quadratic_min(a, S, "critical:min")
    if u is None:
        vacuous = CheckOutcome("vacuous", _mode(exact), note="C_min = {0}")
        return vacuous, vacuous
    witness = Witness(value, u=u, h=hmap @ u, alpha=alpha, beta=beta)
    if value >= opts.strict_tol:
        sufficient = CheckOutcome("holds", _mode(exact), margin=value, note="Schur complement")
    else:
        sufficient = CheckOutcome("fails", "proved", witness, "Schur complement not positive")
    if value >= -opts.tol:
        necessary = CheckOutcome("holds", _mode(exact), margin=value, note="Schur complement")
    else:
        necessary = CheckOutcome("fails", "proved", witness, "Schur complement negative")
    return sufficient, necessary


# Nonsmooth second order ------------------------------------------------------------------


def _tangent_set(a: _Analysis, side: SIDE, critical: bool) -> tuple[np.ndarray, bool]:
    """Directions of the tangent cone (critical ones only when asked), exact flag."""
    if critical and a.f_smooth:
        W, exact = a.directions(f"critical:{side}", NONSMOOTH_SAMPLES)
        rays = a.rays(f"critical:{side}")
        return W, exact or (rays is not None and rays.is_zero)
    W, exact = a.directions(side, NONSMOOTH_SAMPLES)
    rays = a.rays(side)
    exact = exact or (rays is not None and rays.is_zero)
    if critical and len(W):
        d = subderivatives(a.prob.f, a.p, a.embed(side, W))
        W = W[np.abs(d) <= a.opts.tol]
    return W, exact


def _indicator_values(a: _Analysis, side: SIDE, W: np.ndarray) -> np.ndarray | None:
    """d²δ(z̄; v̄)(w) per row, v̄ = −d_x f (x block) or d_y f (y block). None if not computable."""
    cs = a.prob.system(side)
    if cs.is_unconstrained:
        case, data = "whole_space", None
    elif cs.is_affine:
        case, data = "polyhedral", a.cone(side)
    else:
        if _smooth_prerequisite(a) is not None:
            return None
        term = a.term(side)
        multipliers = tuple(term.full(v) for v in term.vertex_set.vertices)
        z = a.prob.block(a.p, side)
        data = NonlinearIndicatorData(a.cone(side), cs.hessians(z), multipliers)
        case = "nonlinear_polyhedral"
    sign = -1.0 if side == "min" else 1.0

    def v_bar(w: np.ndarray) -> float:
        return sign * float(subderivatives(a.prob.f, a.p, a.embed(side, w))[0])

    return np.array(
        [indicator_second_sub(case, data, v_bar, w, a.opts.tol).total for w in W]  # type: ignore[arg-type]
    ).reshape(len(W))


def _separation_gate(a: _Analysis, U: np.ndarray, G: np.ndarray) -> None:
    worst = (0.0, None, None)
    for u in U[:SEPARATION_PROBES]:
        for h in G[:SEPARATION_PROBES]:
            defect = separation_defect(a.prob.f, a.p, u, h)
            if defect > worst[0]:
                worst = (defect, u, h)
    if worst[0] > a.opts.tol:
        raise SeparationHypothesisFailed(worst[0], _as_tuple(worst[1]), _as_tuple(worst[2]))


def _nonsmooth_max(a: _Analysis, strict: bool) -> CheckOutcome:
    W, exact = _tangent_set(a, "max", critical=True)
    if len(W) == 0:
        return CheckOutcome("vacuous", _mode(exact), note="no nonzero critical direction")
    indicator = _indicator_values(a, "max", W)
    if indicator is None:
        return _inconclusive("indicator term needs smooth data and MSCQ")
    values = second_subderivatives(a.prob.f, a.p, a.embed("max", W)) - indicator
    threshold = -a.opts.strict_tol if strict else a.opts.tol
    i = int(np.argmax(values))
    if values[i] <= threshold:
        return CheckOutcome("holds", _mode(exact), margin=float(-values[i]) if strict else None)
    return CheckOutcome("fails", "proved", Witness(values[i], h=W[i]), "d²_yy f(h) − d²δ_Y(h)")


def _search_h(
    a: _Analysis,
    u: np.ndarray,
    G: np.ndarray,
    objective: Callable[[np.ndarray], np.ndarray],
    penalty: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Best of objective(u, h) − t²·penalty(g) over h = t·g on a t-grid, refined by the
    vertex of the quadratic through t = 0, 1, 2. Directions with infinite penalty only
    contribute h = 0."""
    m = a.m
    G = G[np.isfinite(penalty)]
    penalty = penalty[np.isfinite(penalty)]
    k = len(G)
    if k == 0:
        h0 = np.zeros(m)
        return float(objective(np.concatenate([u, h0])[None, :])[0]), h0

    probe_t = np.array([0.0, 1.0, 2.0])
    probe_h = (probe_t[None, :, None] * G[:, None, :]).reshape(-1, m)
    q = objective(np.hstack([np.tile(u, (len(probe_h), 1)), probe_h])).reshape(k, 3)
    q = q - probe_t**2 * penalty[:, None]
    curvature = (q[:, 2] - 2 * q[:, 1] + q[:, 0]) / 2
    slope = q[:, 1] - q[:, 0] - curvature
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex_t = np.where(curvature < 0, np.maximum(0.0, -slope / (2 * curvature)), 0.0)

    T = np.hstack([np.tile(_T_GRID, (k, 1)), vertex_t[:, None]])  # shape (k, len(grid) + 1)
    H = (T[:, :, None] * G[:, None, :]).reshape(-1, m)
    values = objective(np.hstack([np.tile(u, (len(H), 1)), H])) - (T**2 * penalty[:, None]).reshape(-1)
    i = int(np.nanargmax(values))
    return float(values[i]), H[i]


def _nonsmooth_joint(a: _Analysis, strict: bool, relaxed: bool = False) -> CheckOutcome:
    U, exact_u = _tangent_set(a, "min", critical=True)
    G, _ = _tangent_set(a, "max", critical=not relaxed)
    if len(U) == 0:
        return CheckOutcome("vacuous", _mode(exact_u), note="no nonzero critical direction")
    _separation_gate(a, U, G)
    ind_x = _indicator_values(a, "min", U)
    ind_y = np.zeros(len(G)) if relaxed else _indicator_values(a, "max", G)
    if ind_x is None or ind_y is None:
        return _inconclusive("indicator term needs smooth data and MSCQ")
    f, p, n = a.prob.f, a.p, a.n

    def objective(rows: np.ndarray) -> np.ndarray:
        values = second_subderivatives(f, p, rows)
        if relaxed:
            y_only = rows.copy()
            y_only[:, :n] = 0.0
            values = values - second_subderivatives(f, p, y_only)
        return values

    threshold = a.opts.strict_tol if strict else -a.opts.tol
    worst, worst_u, worst_h = math.inf, None, None
    for u, ix in zip(U, ind_x):
        best, h = _search_h(a, u, G, objective, ind_y)
        best += ix
        if best < worst:
            worst, worst_u, worst_h = best, u, h
    if worst >= threshold:
        margin = worst if strict and np.isfinite(worst) else None
        return CheckOutcome("holds", "sampled", margin=margin)
    return CheckOutcome("fails", "sampled", Witness(worst, u=worst_u, h=worst_h), "best sampled h")


def check_nonsmooth_necessary(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> Pair:
    """(max side, joint) second-order conditions in subderivative form:
    d²_yy f(h) − d²δ_Y(h) <= 0 on critical h, and for critical u some h with
    d²f(u,h) + d²δ_X(u) − d²δ_Y(h) >= 0. Raises SeparationHypothesisFailed."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _nonsmooth_max(a, strict=False), _nonsmooth_joint(a, strict=False)


def check_nonsmooth_sufficient(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> Pair:
    """Strict versions of check_nonsmooth_necessary over nonzero critical directions."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _nonsmooth_max(a, strict=True), _nonsmooth_joint(a, strict=True)


def check_relaxed_necessary(
    prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None
) -> CheckOutcome:
    """For critical u some h in T_Y(ȳ) with d²_xx f(u) + 2d²_xy f(u,h) + d²δ_X(u) >= 0."""
    a = _analysis(prob, p, opts or CertifyOptions())
    return _nonsmooth_joint(a, strict=False, relaxed=True)


# Report ----------------------------------------------------------------------------------


def _guarded(check: Callable[[], Any], count: int) -> Any:
    """Run a check, turning a refused hypothesis into inconclusive outcomes."""
    try:
        return check()
    except SeparationHypothesisFailed as e:
        outcome = _inconclusive(f"separation property fails: {e}")
    except NonsmoothAtPoint as e:
        outcome = _inconclusive(str(e))
    return outcome if count == 1 else (outcome,) * count


def _as_outcomes(value: CheckOutcome | Pair) -> tuple[CheckOutcome, ...]:
    return value if isinstance(value, tuple) else (value,)


def _proved_pass(report: dict[str, Any], *names: str) -> bool:
    return all(o.passed and o.proved for name in names for o in _as_outcomes(report[name]))


def _first_failing(report: dict[str, Any], proved_only: bool) -> str | None:
    for name in NECESSARY_PRIORITY:
        if any(o.verdict == "fails" and (o.proved or not proved_only) for o in _as_outcomes(report[name])):
            return name
    return None


def _conclude(report: dict[str, Any]) -> tuple[str, str]:
    refuted = _first_failing(report, proved_only=True)
    certified = (
        _proved_pass(report, "so_sufficient_max", "so_sufficient_joint")
        or _proved_pass(report, "schur_sufficient")
        or _proved_pass(report, "strict_first_order")
    )
    if certified and refuted:
        raise InconsistencyError(f"point is certified and refuted by {refuted}")
    if refuted:
        return "REFUTED", refuted
    if certified:
        return "CERTIFIED", ""
    sampled_failure = _first_failing(report, proved_only=False)
    if sampled_failure:
        return "INCONCLUSIVE", f"{sampled_failure} fails on sampled directions only"
    second = [o for name in NECESSARY_PRIORITY[2:] for o in _as_outcomes(report[name])]
    if all(not o.conclusive for o in second):
        return "INCONCLUSIVE", second[0].note or "no second-order check applies"
    return "CONSISTENT", ""


def certify(prob: MinimaxProblem, p: Point, opts: CertifyOptions | None = None) -> CertificateReport:
    """Run every check and conclude CERTIFIED, REFUTED, CONSISTENT or INCONCLUSIVE."""
    opts = opts or CertifyOptions()
    _analysis(prob, p, opts)  # raises InfeasiblePoint before any check runs
    report: dict[str, Any] = {
        "first_order_primal": check_first_order(prob, p, opts),
        "first_order_dual": check_first_order_dual(prob, p, opts),
        "strict_first_order": check_strict_first_order(prob, p, opts),
    }
    first_order_ok = all(
        o.verdict != "fails" for name in ("first_order_primal", "first_order_dual") for o in report[name]
    )
    if first_order_ok:
        report["schur_sufficient"], report["schur_necessary"] = schur_check(prob, p, opts)
        report["so_necessary_max"], report["so_necessary_joint"] = check_second_order_necessary(
            prob, p, opts
        )
        report["so_sufficient_max"], report["so_sufficient_joint"] = check_second_order_sufficient(
            prob, p, opts
        )
        report["nonsmooth_necessary_max"], report["nonsmooth_necessary_joint"] = _guarded(
            lambda: check_nonsmooth_necessary(prob, p, opts), 2
        )
        report["nonsmooth_sufficient_max"], report["nonsmooth_sufficient_joint"] = _guarded(
            lambda: check_nonsmooth_sufficient(prob, p, opts), 2
        )
        report["relaxed_necessary"] = _guarded(lambda: check_relaxed_necessary(prob, p, opts), 1)
        report["weak_sufficient_flag"] = weak_sufficient_flag(prob, p, opts)
    else:
        logging.info("certify: certify: first-order condition fails, second-order checks skipped")
        skipped = _inconclusive("skipped: first-order condition fails")
        for name in CertificateReport._SINGLES:
            report[name] = skipped

    conclusion, reason = _conclude(report)

    assumptions = []
    if not prob.is_unconstrained:
        if prob.assume_mscq:
            assumptions.append("MSCQ holds for the constraint systems (asserted)")
        elif prob.mscq:
            assumptions.append("MSCQ holds for the constraint systems (affine constraints)")
        else:
            assumptions.append("MSCQ for the constraint systems (not asserted, constrained theorems skipped)")
    if not prob.y_constraints.is_unconstrained:
        assumptions.append("δ_Y is twice epi-differentiable at ȳ for d_y f(x̄,ȳ)")
        assumptions.append("f(x̄,·) is Lipschitz continuous around ȳ")

    notes = ["subderivative and superderivative coincide for this expression class (d = d⁺)"]
    if conclusion == "CERTIFIED" and _proved_pass(report, "so_sufficient_max", "so_sufficient_joint"):
        notes.append("second-order growth condition holds at the point")
    if report["weak_sufficient_flag"].passed:
        notes.append("weak sufficient condition holds: local minimax ⇔ calm local minimax here")
    logging.debug(f"certify: certify: {conclusion} {reason}")
    return CertificateReport(
        **report, assumptions=tuple(assumptions), notes=tuple(notes), conclusion=conclusion, reason=reason
    )
