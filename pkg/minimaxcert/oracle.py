"""Brute-force classification of a candidate point on meshes.

Verdicts are resolution-qualified: `true` means no counterexample was found on the meshes
described by the GridSpec.
"""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from ._types import CALM_VERDICT, TRISTATE
from ._util import ComputeOnceCache
from .exception import EmptyFeasibleBall, InconsistencyError, NotMaxSide
from .exprcore import Point, evaluate, evaluate_batch
from .kkt import MinimaxProblem

__all__ = [
    "GridSpec",
    "TauRow",
    "TauProfile",
    "OracleVerdict",
    "ClassificationReport",
    "ArgmaxCalmness",
    "OracleSession",
    "inner_max",
    "tau_profile",
    "classify",
    "argmax_calmness",
    "check_implication_chain",
]

MAX_MESH_NODES = 20001
MAX_BATCH = 2_000_000  # f evaluations per vectorized block
POLISH_STEPS = 40
LADDER_RATIO = 2 ** 0.25
FEASIBILITY_TOL = 1e-9


def _default_deltas() -> tuple[float, ...]:
    return tuple(float(d) for d in np.geomspace(1e-1, 1e-4, 13))


@dataclass(frozen=True)
class GridSpec:
    delta_values: tuple[float, ...] = field(default_factory=_default_deltas)
    mesh_per_axis: int = 201
    kappa_max: float = 64.0
    value_tol: float = 1e-12
    workers: int = 4

    def __post_init__(self) -> None:
        deltas = tuple(float(d) for d in self.delta_values)
        object.__setattr__(self, "delta_values", deltas)
        if not deltas or any(d <= 0 for d in deltas):
            raise ValueError("delta_values must be positive")
        if any(a <= b for a, b in zip(deltas, deltas[1:])):
            raise ValueError("delta_values must be sorted in descending order")
        if self.mesh_per_axis < 3 or self.mesh_per_axis % 2 == 0:
            raise ValueError("mesh_per_axis must be odd and at least 3")
        if self.kappa_max <= 0 or self.value_tol < 0 or self.workers < 1:
            raise ValueError("kappa_max and workers must be positive, value_tol nonnegative")

    @classmethod
    def geometric(
        cls, delta_max: float = 1e-1, delta_min: float = 1e-4, count: int = 13, **kwargs: Any
    ) -> GridSpec:
        return cls(tuple(float(d) for d in np.geomspace(delta_max, delta_min, count)), **kwargs)

    @property
    def resolution(self) -> str:
        d = self.delta_values
        return f"mesh={self.mesh_per_axis} delta={d[0]:.3g}..{d[-1]:.3g} ({len(d)} values)"


@dataclass(frozen=True)
class TauRow:
    delta: float
    tau_min: float
    ratio: float


@dataclass(frozen=True)
class TauProfile:
    rows: tuple[TauRow, ...]
    fitted_exponent: float | None
    calm_verdict: CALM_VERDICT

    @property
    def max_ratio(self) -> float:
        return max((r.ratio for r in self.rows), default=0.0)

    def to_csv(self) -> str:
        lines = ["delta,tau_min,ratio"]
        lines += [f"{r.delta:.12g},{r.tau_min:.12g},{r.ratio:.12g}" for r in self.rows]
        exponent = "nan" if self.fitted_exponent is None else f"{self.fitted_exponent:.6g}"
        lines.append(f"# exponent={exponent} verdict={self.calm_verdict}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": [[r.delta, r.tau_min, r.ratio] for r in self.rows],
            "fitted_exponent": self.fitted_exponent,
            "calm_verdict": self.calm_verdict,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TauProfile:
        return cls(tuple(TauRow(*r) for r in data["rows"]), data["fitted_exponent"], data["calm_verdict"])


@dataclass(frozen=True)
class OracleVerdict:
    value: TRISTATE
    evidence: str = ""

    def __bool__(self) -> bool:
        return self.value == "true"

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "evidence": self.evidence}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> OracleVerdict:
        return cls(data["value"], data.get("evidence", ""))


@dataclass(frozen=True)
class ArgmaxCalmness:
    kappa_hat: float
    rows: tuple[tuple[float, float, float], ...]  # (delta, tau_min, max distance ratio)

    def to_dict(self) -> dict[str, Any]:
        return {"kappa_hat": self.kappa_hat, "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ArgmaxCalmness:
        return cls(data["kappa_hat"], tuple(tuple(r) for r in data["rows"]))


@dataclass(frozen=True)
class ClassificationReport:
    nash: OracleVerdict
    local_nash: OracleVerdict
    local_minimax: OracleVerdict
    calm_local_minimax: OracleVerdict
    global_minimax_on_box: OracleVerdict
    resolution: str = ""
    profile: TauProfile | None = None
    argmax: ArgmaxCalmness | None = None

    _VERDICTS = ("nash", "local_nash", "local_minimax", "calm_local_minimax", "global_minimax_on_box")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {name: getattr(self, name).to_dict() for name in self._VERDICTS}
        data["resolution"] = self.resolution
        data["profile"] = None if self.profile is None else self.profile.to_dict()
        data["argmax"] = None if self.argmax is None else self.argmax.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ClassificationReport:
        return cls(
            **{name: OracleVerdict.from_dict(data[name]) for name in cls._VERDICTS},
            resolution=data.get("resolution", ""),
            profile=None if data.get("profile") is None else TauProfile.from_dict(data["profile"]),
            argmax=None if data.get("argmax") is None else ArgmaxCalmness.from_dict(data["argmax"]),
        )


def check_implication_chain(report: ClassificationReport) -> None:
    """nash ⇒ local_nash ⇒ calm local minimax ⇒ local minimax, else InconsistencyError."""
    chain = ("nash", "local_nash", "calm_local_minimax", "local_minimax")
    for stronger, weaker in zip(chain, chain[1:]):
        if getattr(report, stronger).value == "true" and getattr(report, weaker).value == "false":
            raise InconsistencyError(f"{stronger} is true but {weaker} is false")


# Meshes -------------------------------------------------------------------------------------


def _axis_count(mesh: int, dim: int) -> int:
    """Largest odd k <= mesh with k^dim <= MAX_MESH_NODES."""
    k = mesh
    while k > 3 and k**dim > MAX_MESH_NODES:
        k -= 2
    if k != mesh:
        logging.warning(f"oracle: mesh: {mesh} points per axis in {dim} dimensions capped to {k}")
    return k


@dataclass(frozen=True, eq=False)
class _Mesh:
    """Feasible nodes of a rectangular grid and its cell size."""

    nodes: np.ndarray
    cell: float

    def __len__(self) -> int:
        return len(self.nodes)


def _mesh(lo: np.ndarray, hi: np.ndarray, k: int, keep: Callable[[np.ndarray], np.ndarray]) -> _Mesh:
    d = len(lo)
    axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    cell = float(np.max(hi - lo)) / (k - 1)
    return _Mesh(grid[keep(grid)], cell)


def _maximize(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row maxima of F and the first column attaining each."""
    j = np.argmax(F, axis=1)
    return F[np.arange(len(F)), j], j


def _compass(m: int) -> np.ndarray:
    """The 3^m - 1 nonzero stencil offsets in {-1, 0, 1}^m."""
    offsets = np.stack(np.meshgrid(*[np.array([-1.0, 0.0, 1.0])] * m, indexing="ij"), axis=-1).reshape(-1, m)
    return offsets[np.any(offsets != 0, axis=1)]


@dataclass(frozen=True, eq=False)
class _InnerTable:
    """For every x node of a delta ball: the refined max of f(x, ·) over the radius-r y ball
    and the distance from ȳ to the nearest mesh maximizer."""

    x_nodes: np.ndarray
    values: np.ndarray
    nearest: np.ndarray


class OracleSession:
    """Meshes, inner maxima and the tau profile of one (problem, point, grid) triple.
    Inner-max tables are memoized per (delta, radius) in a thread-safe cache shared by
    tau_profile, classify and argmax_calmness."""

    def __init__(self, prob: MinimaxProblem, p: Point, grid: GridSpec | None = None) -> None:
        prob.check_point(p)
        self.prob = prob
        self.p = p
        self.grid = grid or GridSpec()
        self.x_bar = np.array(p.x)
        self.y_bar = np.array(p.y)
        self.f_bar = evaluate(prob.f, p)
        self.kx = _axis_count(self.grid.mesh_per_axis, prob.n)
        self.ky = _axis_count(self.grid.mesh_per_axis, prob.m)
        self.tables: ComputeOnceCache[_InnerTable] = ComputeOnceCache(self._build_table, "inner max")
        self._balls: ComputeOnceCache[_Mesh] = ComputeOnceCache(self._build_ball, "ball mesh")
        self._stencil = _compass(prob.m)
        self._profile: TauProfile | None = None
        self._profile_lock = threading.Lock()

    # geometry

    def _box(self, block: str) -> tuple[np.ndarray, np.ndarray] | None:
        if self.prob.box is None:
            return None
        n = self.prob.n
        box = np.array(self.prob.box)
        part = box[:n] if block == "x" else box[n:]
        return part[:, 0], part[:, 1]

    def _feasible(self, block: str, Z: np.ndarray) -> np.ndarray:
        cs = self.prob.x_constraints if block == "x" else self.prob.y_constraints
        mask = cs.feasible_mask(Z, FEASIBILITY_TOL)
        box = self._box(block)
        if box is not None:
            lo, hi = box
            mask &= np.all((Z >= lo - FEASIBILITY_TOL) & (Z <= hi + FEASIBILITY_TOL), axis=-1)
        return mask

    def _in_ball(self, block: str, Z: np.ndarray, radius: float | None) -> np.ndarray:
        mask = self._feasible(block, Z)
        if radius is not None:
            center = self.x_bar if block == "x" else self.y_bar
            mask &= np.linalg.norm(Z - center, axis=-1) <= radius * (1 + 1e-12)
        return mask

    def _build_ball(self, key: tuple[str, float]) -> _Mesh:
        block, radius = key
        center = self.x_bar if block == "x" else self.y_bar
        k = self.kx if block == "x" else self.ky
        mesh = _mesh(center - radius, center + radius, k, lambda Z: self._in_ball(block, Z, radius))
        if len(mesh) == 0:
            raise EmptyFeasibleBall(f"no feasible {block} mesh node within {radius:.3g} of the point")
        return mesh

    def ball(self, block: str, radius: float) -> _Mesh:
        return self._balls.get_or_create((block, float(radius)))

    def box_mesh(self, block: str) -> _Mesh | None:
        box = self._box(block)
        if box is None:
            return None
        k = self.kx if block == "x" else self.ky
        return _mesh(box[0], box[1], k, lambda Z: self._feasible(block, Z))

    # inner maxima

    def _values(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return evaluate_batch(self.prob.f, X[:, None, :], Y[None, :, :])

    def _polish(
        self, X: np.ndarray, Y: np.ndarray, best: np.ndarray, cell: float, radius: float | None
    ) -> np.ndarray:
        """Compass search from the mesh maximizers Y, halving the step of rows that stop
        improving. Only feasible candidates are accepted, so the result is an attained value."""
        rows = np.arange(len(X))
        step = np.full(len(X), cell / 2)
        for _ in range(POLISH_STEPS):
            cand = Y[:, None, :] + step[:, None, None] * self._stencil[None, :, :]
            ok = self._in_ball("y", cand, radius)
            values = evaluate_batch(self.prob.f, X[:, None, :], np.where(ok[..., None], cand, Y[:, None, :]))
            values = np.where(ok, values, -np.inf)
            k = np.argmax(values, axis=1)
            top = values[rows, k]
            better = top > best
            best = np.where(better, top, best)
            Y = np.where(better[:, None], cand[rows, k], Y)
            step = np.where(better, step, step / 2)
        return best

    def inner(
        self, X: np.ndarray, ymesh: _Mesh, radius: float | None = None
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(refined max, nearest-maximizer distance, argmax index) per row of X, in blocks."""
        chunk = max(1, MAX_BATCH // max(1, len(ymesh)))
        dist = np.linalg.norm(ymesh.nodes - self.y_bar, axis=1)
        parts = []
        for start in range(0, len(X), chunk):
            rows = X[start : start + chunk]
            F = self._values(rows, ymesh.nodes)
            vmax, j = _maximize(F)
            near = np.where(F >= vmax[:, None] - self.grid.value_tol, dist[None, :], np.inf).min(axis=1)
            vmax = self._polish(rows, ymesh.nodes[j], vmax, ymesh.cell, radius)
            parts.append((vmax, near, j))
        return tuple(np.concatenate([part[i] for part in parts]) for i in range(3))  # type: ignore[return-value]

    def _build_table(self, key: tuple[float, float]) -> _InnerTable:
        delta, radius = key
        X = self.ball("x", delta).nodes
        if radius == 0:
            values = self._values(X, self.y_bar[None, :])[:, 0]
            return _InnerTable(X, values, np.zeros(len(X)))
        values, nearest, _ = self.inner(X, self.ball("y", radius), radius)
        return _InnerTable(X, values, nearest)

    def table(self, delta: float, radius: float) -> _InnerTable:
        return self.tables.get_or_create((float(delta), float(radius)))

    # radius function

    def ladder(self, delta: float) -> list[float]:
        """0, then geometric rungs from one y-mesh cell of the kappa_max·delta ball up to
        kappa_max·delta, continued up to the extent of the y box."""
        top = self.grid.kappa_max * delta
        r = 2 * top / (self.ky - 1)
        rungs = [0.0]
        while r <= top * (1 + 1e-12):
            rungs.append(r)
            r *= LADDER_RATIO
        box = self._box("y")
        if box is not None:
            extent = float(np.linalg.norm(np.maximum(np.abs(box[0] - self.y_bar), np.abs(box[1] - self.y_bar))))
            while rungs[-1] < extent:
                rungs.append(min(r, extent))
                r *= LADDER_RATIO
        return rungs

    def tau_min(self, delta: float) -> float:
        threshold = self.f_bar - self.grid.value_tol
        for r in self.ladder(delta):
            t = self.table(delta, r)
            if np.all(t.values >= threshold):
                return r
        return math.inf

    def check_max_side(self) -> None:
        """Raise NotMaxSide unless f(x̄, y) <= f(x̄, ȳ) + value_tol on the finest y ball."""
        radius = self.grid.delta_values[-1]
        ymesh = self.ball("y", radius)
        values = self._values(self.x_bar[None, :], ymesh.nodes)[0]
        j = int(np.argmax(values))
        excess = float(values[j] - self.f_bar)
        if excess > self.grid.value_tol:
            raise NotMaxSide(tuple(float(v) for v in ymesh.nodes[j]), excess)

    def tau_profile(self) -> TauProfile:
        with self._profile_lock:
            if self._profile is None:
                self._profile = self._compute_profile()
            return self._profile

    def _compute_profile(self) -> TauProfile:
        self.check_max_side()
        deltas = self.grid.delta_values
        if self.grid.workers > 1:
            with ThreadPoolExecutor(max_workers=self.grid.workers) as pool:
                taus = list(pool.map(self.tau_min, deltas))
        else:
            taus = [self.tau_min(d) for d in deltas]
        rows = tuple(TauRow(d, t, t / d) for d, t in zip(deltas, taus))
        exponent = _fit_exponent(rows)
        verdict = _calm_verdict(rows, exponent, self.grid.kappa_max)
        logging.info(
            f"oracle: tau_profile: exponent={exponent} verdict={verdict} "
            f"(cache hits {self.tables.hits}, misses {self.tables.misses})"
        )
        return TauProfile(rows, exponent, verdict)

    # verdicts

    def argmax_calmness(self) -> ArgmaxCalmness:
        profile = self.tau_profile()
        rows = []
        for row in profile.rows:
            if not math.isfinite(row.tau_min):
                rows.append((row.delta, row.tau_min, math.inf))
                continue
            t = self.table(row.delta, row.tau_min)
            dx = np.linalg.norm(t.x_nodes - self.x_bar, axis=1)
            annulus = dx > row.delta / 10**0.25
            ratio = float(np.max(t.nearest[annulus] / dx[annulus])) if np.any(annulus) else 0.0
            rows.append((row.delta, row.tau_min, ratio))
        kappa_hat = max((r[2] for r in rows), default=0.0)
        return ArgmaxCalmness(kappa_hat, tuple(rows))

    def _slice(self, block: str, nodes: np.ndarray) -> np.ndarray:
        """f(x, ȳ) over x nodes or f(x̄, y) over y nodes."""
        if block == "x":
            return self._values(nodes, self.y_bar[None, :])[:, 0]
        return self._values(self.x_bar[None, :], nodes)[0]

    def _violation(
        self, block: str, nodes: np.ndarray, values: np.ndarray, where: str
    ) -> OracleVerdict | None:
        tol = self.grid.value_tol
        if block == "y":
            j = int(np.argmax(values))
            if values[j] > self.f_bar + tol:
                return OracleVerdict("false", f"f(x̄, y) > f(x̄, ȳ) at y={_fmt(nodes[j])} ({where})")
            return None
        i = int(np.argmin(values))
        if values[i] < self.f_bar - tol:
            return OracleVerdict("false", f"f(x, ȳ) < f(x̄, ȳ) at x={_fmt(nodes[i])} ({where})")
        return None

    def _informative_delta(self, block: str) -> tuple[float, np.ndarray, np.ndarray] | None:
        """Smallest delta whose ball slice of f varies by more than value_tol, with its nodes
        and slice values."""
        for delta in reversed(self.grid.delta_values):
            nodes = self.ball(block, delta).nodes
            values = self._slice(block, nodes)
            if np.any(np.abs(values - self.f_bar) > self.grid.value_tol):
                return delta, nodes, values
        return None

    def local_nash(self) -> OracleVerdict:
        checked = []
        for block in ("y", "x"):
            signal = self._informative_delta(block)
            if signal is None:
                continue
            delta, nodes, values = signal
            where = f"delta={delta:.3g}"
            violation = self._violation(block, nodes, values, where)
            if violation is not None:
                return violation
            checked.append(f"{block}: {where}")
        if not checked:
            return OracleVerdict("true", "f is constant on every delta ball")
        return OracleVerdict("true", f"no violation ({', '.join(checked)})")

    def nash(self) -> OracleVerdict:
        xmesh, ymesh = self.box_mesh("x"), self.box_mesh("y")
        if xmesh is None or ymesh is None:
            return OracleVerdict("undetermined", "no box")
        for block, mesh in (("y", ymesh), ("x", xmesh)):
            violation = self._violation(block, mesh.nodes, self._slice(block, mesh.nodes), "box")
            if violation is not None:
                return violation
        return OracleVerdict("true", "no violation (box)")

    def global_minimax(self) -> OracleVerdict:
        xmesh, ymesh = self.box_mesh("x"), self.box_mesh("y")
        if xmesh is None or ymesh is None:
            return OracleVerdict("undetermined", "no box")
        tol = self.grid.value_tol
        fy = self._values(self.x_bar[None, :], ymesh.nodes)[0]
        j = int(np.argmax(fy))
        if fy[j] > self.f_bar + tol:
            return OracleVerdict("false", f"ȳ does not maximize f(x̄, ·): y={_fmt(ymesh.nodes[j])}")
        values, _, _ = self.inner(xmesh.nodes, ymesh)
        i = int(np.argmin(values))
        if values[i] < self.f_bar - tol:
            return OracleVerdict("false", f"max_y f(x, y) < f(x̄, ȳ) at x={_fmt(xmesh.nodes[i])}")
        return OracleVerdict("true", "no violation (box)")

    def classify(self, box_only: bool = False) -> ClassificationReport:
        resolution = self.grid.resolution
        if box_only:
            skipped = OracleVerdict("undetermined", "skipped (box only)")
            report = ClassificationReport(
                self.nash(), skipped, skipped, skipped, self.global_minimax(), resolution
            )
            check_implication_chain(report)
            return report
        try:
            profile = self.tau_profile()
        except NotMaxSide as e:
            false = OracleVerdict("false", str(e))
            return ClassificationReport(false, false, false, false, false, resolution)

        finite = [math.isfinite(r.tau_min) for r in profile.rows]
        if all(finite):
            local = OracleVerdict("true", f"tau_min finite at every delta, max ratio {profile.max_ratio:.4g}")
        elif not finite[-1]:
            delta = profile.rows[-1].delta
            local = OracleVerdict("false", f"no radius works at delta={delta:.3g}")
        else:
            local = OracleVerdict("undetermined", "tau_min infinite at some coarse delta")
        calm = {
            "calm": OracleVerdict("true", f"max ratio {profile.max_ratio:.4g}"),
            "not_calm": OracleVerdict("false", f"exponent {profile.fitted_exponent}, max ratio {profile.max_ratio:.4g}"),
            "undetermined": OracleVerdict("undetermined", "radius profile borderline"),
        }[profile.calm_verdict]
        report = ClassificationReport(
            self.nash(),
            self.local_nash(),
            local,
            calm,
            self.global_minimax(),
            resolution,
            profile,
            self.argmax_calmness(),
        )
        check_implication_chain(report)
        return report


def _fmt(v: Sequence[float]) -> str:
    return "(" + ", ".join(f"{float(a):.6g}" for a in v) + ")"


def _fit_exponent(rows: Sequence[TauRow]) -> float | None:
    """Least-squares slope of log tau_min against log delta over rows with 0 < tau_min < inf."""
    usable = [r for r in rows if 0 < r.tau_min < math.inf]
    if len(usable) < 2:
        return None
    slope, _ = np.polyfit(np.log([r.delta for r in usable]), np.log([r.tau_min for r in usable]), 1)
    return float(slope)


def _calm_verdict(rows: Sequence[TauRow], exponent: float | None, kappa_max: float) -> CALM_VERDICT:
    trailing_zeros = 0
    for r in reversed(rows):
        if r.tau_min != 0:
            break
        trailing_zeros += 1
    if trailing_zeros >= 2:
        return "calm"
    if rows and not math.isfinite(rows[-1].tau_min):
        return "not_calm"
    ratios = [r.ratio for r in rows]
    positive = [r for r in rows if 0 < r.tau_min < math.inf]
    if len(positive) < 2:
        return "calm" if all(x <= kappa_max for x in ratios) else "undetermined"
    if max(ratios) <= kappa_max and exponent is not None and exponent >= 0.9:
        return "calm"
    growth = [r.ratio for r in positive]
    decade = 4  # rungs per decade on the default 13-point grid
    grows = len(growth) > decade and all(
        growth[i + decade] >= 2 * growth[i] for i in range(len(growth) - decade)
    )
    if exponent is not None and exponent <= 0.9 and grows:
        return "not_calm"
    return "undetermined"


# Module-level entry points ------------------------------------------------------------------


def inner_max(
    prob: MinimaxProblem,
    x: Sequence[float],
    radius: float,
    center: Sequence[float],
    mesh: int = 201,
) -> tuple[float, tuple[float, ...]]:
    """Mesh maximum of f(x, ·) over Y ∩ B_radius(center) and a maximizing mesh node."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if mesh < 3:
        raise ValueError("mesh must have at least 3 points per axis")
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    if radius == 0:
        return evaluate(prob.f, Point(tuple(x), tuple(center))), tuple(float(v) for v in center)
    k = _axis_count(mesh if mesh % 2 else mesh + 1, prob.m)

    def keep(Z: np.ndarray) -> np.ndarray:
        return (np.linalg.norm(Z - center, axis=1) <= radius * (1 + 1e-12)) & prob.y_constraints.feasible_mask(
            Z, FEASIBILITY_TOL
        )

    ymesh = _mesh(center - radius, center + radius, k, keep)
    if len(ymesh) == 0:
        raise EmptyFeasibleBall(f"no feasible y mesh node within {radius:.3g} of {tuple(center)}")
    values = evaluate_batch(prob.f, x[None, :], ymesh.nodes)
    j = int(np.argmax(values))
    return float(values[j]), tuple(float(v) for v in ymesh.nodes[j])


def tau_profile(prob: MinimaxProblem, p: Point, grid: GridSpec | None = None) -> TauProfile:
    return OracleSession(prob, p, grid).tau_profile()


def classify(
    prob: MinimaxProblem, p: Point, grid: GridSpec | None = None, box_only: bool = False
) -> ClassificationReport:
    return OracleSession(prob, p, grid).classify(box_only)


def argmax_calmness(prob: MinimaxProblem, p: Point, grid: GridSpec | None = None) -> ArgmaxCalmness:
    return OracleSession(prob, p, grid).argmax_calmness()
