import math
from numbers import Number

import numpy as np
import pytest

from minimaxcert.cones import Constraint, ConstraintSystem, membership
from minimaxcert.exception import DimensionError, DimensionTooLarge, InfeasiblePoint
from minimaxcert.exprcore import Point, parse_expression
from minimaxcert.kkt import (
    MinimaxProblem,
    critical_cone,
    lagrangian_hessians,
    multiplier_set,
    vertices,
)

ORIGIN = Point((0.0,), (0.0,))


def close(a, b, tol: float = 1e-9) -> bool:
    if isinstance(a, Number) and isinstance(b, Number):
        return math.isclose(a, b, abs_tol=tol)
    return all(math.isclose(i, j, abs_tol=tol) for i, j in zip(np.ravel(a), np.ravel(b), strict=True))


def system(block: str, dim: int, *rows: tuple[str, str]) -> ConstraintSystem:
    return ConstraintSystem(block, dim, tuple(Constraint(parse_expression(e), k) for e, k in rows))  # type: ignore


def fair() -> MinimaxProblem:
    return MinimaxProblem(
        1,
        1,
        parse_expression("y1*(-x1^3 + x1) + (1 - y1)*(-x1^3)"),
        y_constraints=system("y", 1, ("y1 - 1", "le"), ("-y1", "le")),
        box=((-1, 1), (0, 1)),
    )


def test_problem_defaults() -> None:
    prob = MinimaxProblem(1, 1, parse_expression("x1*y1"))
    assert prob.is_unconstrained
    assert prob.x_constraints.block == "x" and prob.y_constraints.dim == 1
    assert prob.mscq
    assert prob.smooth_at(ORIGIN)
    assert prob.box is None


def test_problem_validation() -> None:
    f = parse_expression("x1*y1")
    with pytest.raises(DimensionError):
        MinimaxProblem(0, 1, f)
    with pytest.raises(DimensionError):
        MinimaxProblem(1, 1, parse_expression("x2*y1"))
    with pytest.raises(DimensionError):
        MinimaxProblem(1, 1, f, x_constraints=system("x", 2, ("x1", "le")))
    with pytest.raises(DimensionError):
        MinimaxProblem(1, 1, f, box=((-1, 1),))
    with pytest.raises(DimensionError):
        MinimaxProblem(1, 1, f, box=((1, -1), (0, 1)))
    assert MinimaxProblem(1, 1, f, box=[[-1, 1], [0, 2]]).box == ((-1.0, 1.0), (0.0, 2.0))


def test_check_point() -> None:
    prob = fair()
    prob.check_point(ORIGIN)
    with pytest.raises(DimensionError):
        prob.check_point(Point((0.0, 0.0), (0.0,)))
    with pytest.raises(InfeasiblePoint):
        prob.check_point(Point((0.0,), (2.0,)))


def test_mscq_and_smoothness() -> None:
    disk = system("x", 2, ("x1^2 + x2^2 - 1", "le"))
    f = parse_expression("x1 + y1")
    assert not MinimaxProblem(2, 1, f, x_constraints=disk).mscq
    assert MinimaxProblem(2, 1, f, x_constraints=disk, assume_mscq=True).mscq
    assert fair().mscq
    assert fair().has_affine_constraints
    kinked = MinimaxProblem(1, 1, parse_expression("abs(x1) - y1^2"))
    assert not kinked.smooth_at(ORIGIN)
    assert kinked.smooth_at(Point((1.0,), (0.0,)))


def test_multiplier_set_fair_max_side_is_zero() -> None:
    mp = multiplier_set(fair(), ORIGIN, "max")
    assert mp.indices == (1,)
    assert mp.size == 1
    assert not mp.is_empty
    assert mp.contains([0.0])
    assert not mp.contains([1.0])
    assert not mp.contains([0.0, 0.0])
    vs = vertices(mp)
    assert vs.is_single_point
    assert close(vs.vertices[0], [0.0])
    assert close(mp.expand(vs.vertices[0]), [0.0, 0.0])


def test_multiplier_set_unconstrained() -> None:
    prob = MinimaxProblem(1, 1, parse_expression("x1*y1"))
    mp = multiplier_set(prob, ORIGIN, "min")
    assert mp.size == 0 and not mp.is_empty
    assert vertices(mp).is_single_point
    # nonzero gradient with no constraints: no multiplier can cancel it
    assert multiplier_set(prob, Point((0.0,), (1.0,)), "min").is_empty


def test_multiplier_set_equality_is_free() -> None:
    prob = MinimaxProblem(
        2,
        1,
        parse_expression("x1^2 + x2^2 - y1^2"),
        x_constraints=system("x", 2, ("x1 + x2 - 1", "eq")),
    )
    mp = multiplier_set(prob, Point((0.5, 0.5), (0.0,)), "min")
    assert mp.free == (0,) and mp.sign_constrained == ()
    vs = vertices(mp)
    assert vs.is_single_point
    assert close(vs.vertices[0], [-1.0])


def test_multiplier_set_empty() -> None:
    prob = MinimaxProblem(1, 1, parse_expression("x1 - y1^2"), x_constraints=system("x", 1, ("x1", "le")))
    mp = multiplier_set(prob, ORIGIN, "min")
    assert mp.is_empty
    assert vertices(mp).empty


def test_vertices_of_a_segment() -> None:
    prob = MinimaxProblem(
        1,
        1,
        parse_expression("-x1 - y1^2"),
        x_constraints=system("x", 1, ("x1", "le"), ("2*x1", "le")),
    )
    mp = multiplier_set(prob, ORIGIN, "min")
    vs = vertices(mp)
    assert len(vs.vertices) == 2
    assert any(close(v, [1.0, 0.0]) for v in vs.vertices)
    assert any(close(v, [0.0, 0.5]) for v in vs.vertices)
    assert not vs.directions
    with pytest.raises(DimensionTooLarge):
        vertices(mp, max_components=1)


def test_vertices_with_recession_ray() -> None:
    # opposite constraints x1 <= 0 and -x1 <= 0: α1 - α2 = 0 leaves the ray (1, 1)
    prob = MinimaxProblem(
        1,
        1,
        parse_expression("x1^2 - y1^2"),
        x_constraints=system("x", 1, ("x1", "le"), ("-x1", "le")),
    )
    vs = vertices(multiplier_set(prob, ORIGIN, "min"))
    assert len(vs.vertices) == 1 and close(vs.vertices[0], [0.0, 0.0])
    assert len(vs.rays) == 1
    assert close(vs.rays[0] / np.linalg.norm(vs.rays[0]), np.array([1.0, 1.0]) / math.sqrt(2))


def test_critical_cone() -> None:
    c_max = critical_cone(fair(), ORIGIN, "max")
    assert membership(c_max, (1.0,))
    assert not membership(c_max, (-1.0,))
    cubic = MinimaxProblem(1, 1, parse_expression("-y1^2 + x1*y1 + x1^3 + x1^4"))
    assert membership(critical_cone(cubic, ORIGIN, "min"), (-1.0,))
    # off a stationary point the critical cone is the hyperplane ∇f·u = 0
    linear = MinimaxProblem(2, 1, parse_expression("x1 + x2 - y1^2"))
    cone = critical_cone(linear, Point((0.0, 0.0), (0.0,)), "min")
    assert membership(cone, (1.0, -1.0))
    assert not membership(cone, (1.0, 0.0))


def test_lagrangian_hessians() -> None:
    prob = MinimaxProblem(
        1,
        1,
        parse_expression("x1*y1"),
        x_constraints=system("x", 1, ("x1^2 - 1", "le")),
        y_constraints=system("y", 1, ("y1^2 - 1", "le")),
    )
    p = Point((1.0,), (1.0,))
    lh = lagrangian_hessians(prob, p, [2.0], [3.0])
    assert close(lh.H_min, [[4, 1], [1, -6]])
    assert close(lh.H_max_yy, [[-6]])
    xx, yx, yy = lh.blocks(1)
    assert close(xx, [[4]]) and close(yx, [[1]]) and close(yy, [[-6]])
    assert close(lagrangian_hessians(prob, p).H_min, [[0, 1], [1, 0]])
    with pytest.raises(DimensionError):
        lagrangian_hessians(prob, p, [1.0, 2.0])
