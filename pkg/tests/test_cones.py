import math
from numbers import Number

import numpy as np
import pytest

from minimaxcert.cones import (
    Constraint,
    ConstraintSystem,
    NonlinearIndicatorData,
    PolyhedralCone,
    active_set,
    extreme_rays,
    indicator_second_sub,
    lp_feasible,
    lp_phase_one,
    membership,
    sample_cone_directions,
    tangent_cone,
)
from minimaxcert.exception import (
    DimensionError,
    DimensionTooLarge,
    EmptyMultiplierSet,
    InfeasiblePoint,
)
from minimaxcert.exprcore import parse_expression


def close(a, b, tol: float = 1e-9) -> bool:
    if isinstance(a, Number) and isinstance(b, Number):
        return math.isclose(a, b, abs_tol=tol)
    return all(math.isclose(i, j, abs_tol=tol) for i, j in zip(np.ravel(a), np.ravel(b), strict=True))


def unit_interval() -> ConstraintSystem:
    return ConstraintSystem(
        "y",
        1,
        (
            Constraint(parse_expression("y1 - 1"), "le"),
            Constraint(parse_expression("-y1"), "le"),
        ),
    )


def contains_direction(vectors, target) -> bool:
    target = np.asarray(target, dtype=float)
    target = target / np.linalg.norm(target)
    return any(close(v / np.linalg.norm(v), target, tol=1e-8) for v in vectors)


def test_constraint_system_properties() -> None:
    cs = unit_interval()
    assert cs.p1 == 2 and cs.p2 == 0
    assert cs.is_affine
    assert not cs.is_unconstrained
    assert ConstraintSystem("x", 3).is_unconstrained
    assert close(cs.values((0.25,)), [-0.75, -0.25])
    assert close(cs.gradients((0.25,)), [[1], [-1]])
    with pytest.raises(ValueError):
        Constraint(parse_expression("x1"), "ge")  # type: ignore
    with pytest.raises(DimensionError):
        ConstraintSystem("x", 1, (Constraint(parse_expression("y1")),))
    with pytest.raises(DimensionError):
        ConstraintSystem("x", 1, (Constraint(parse_expression("x2")),))


def test_feasible_mask() -> None:
    mask = unit_interval().feasible_mask(np.array([[-0.5], [0.0], [0.5], [1.0], [1.5]]), 1e-9)
    assert mask.tolist() == [False, True, True, True, False]
    circle = ConstraintSystem("x", 2, (Constraint(parse_expression("x1^2 + x2^2 - 1"), "eq"),))
    assert circle.feasible_mask(np.array([[1.0, 0.0], [0.5, 0.5]]), 1e-9).tolist() == [True, False]


def test_active_set_is_zero_based() -> None:
    cs = unit_interval()
    assert active_set(cs, (0.0,)) == (1,)
    assert active_set(cs, (1.0,)) == (0,)
    assert active_set(cs, (0.5,)) == ()
    with pytest.raises(InfeasiblePoint) as info:
        active_set(cs, (1.5,))
    assert info.value.index == 0
    assert close(info.value.violation, 0.5)


def test_tangent_cone_and_membership() -> None:
    k = tangent_cone(unit_interval(), (0.0,))
    assert membership(k, (1.0,))
    assert membership(k, (0.0,))
    assert not membership(k, (-1.0,))
    assert tangent_cone(unit_interval(), (0.5,)).is_full_space
    with pytest.raises(DimensionError):
        membership(k, (1.0, 0.0))


def test_membership_invariant_to_row_scaling() -> None:
    w = np.array([1.0, 1e-10])
    small = PolyhedralCone([[0.0, 1e-6]], None, 2)
    large = PolyhedralCone([[0.0, 1e6]], None, 2)
    assert membership(small, w) == membership(large, w)


def test_extreme_rays_orthant() -> None:
    rays = extreme_rays(PolyhedralCone(-np.eye(2), None, 2))
    assert len(rays.rays) == 2
    assert not rays.lineality
    assert contains_direction(rays.rays, (1, 0))
    assert contains_direction(rays.rays, (0, 1))
    assert rays.exhaustive


def test_extreme_rays_with_lineality() -> None:
    rays = extreme_rays(PolyhedralCone([[1.0, 0.0]], None, 2))
    assert len(rays.rays) == 1
    assert contains_direction(rays.rays, (-1, 0))
    assert len(rays.lineality) == 1
    assert close(abs(rays.lineality[0][1]), 1.0)
    assert len(rays.generators) == 3

    full = extreme_rays(PolyhedralCone.full(3))
    assert full.is_subspace
    assert len(full.lineality) == 3

    line = extreme_rays(PolyhedralCone(None, [[1.0, 0.0]], 2))
    assert line.is_subspace
    assert len(line.lineality) == 1


def test_extreme_rays_zero_cone() -> None:
    rays = extreme_rays(PolyhedralCone([[1.0], [-1.0]], None, 1))
    assert rays.is_zero
    assert rays.generators == ()


def test_extreme_rays_needs_combination() -> None:
    # |w1| <= w3 and |w2| <= w3: a square pyramid with four edges
    A = [[1, 0, -1], [-1, 0, -1], [0, 1, -1], [0, -1, -1]]
    k = PolyhedralCone(A, None, 3)
    rays = extreme_rays(k)
    assert len(rays.rays) == 4
    for signs in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        assert contains_direction(rays.rays, (*signs, 1))
    assert all(membership(k, r) for r in rays.rays)


def test_extreme_rays_dimension_guard() -> None:
    with pytest.raises(DimensionTooLarge):
        extreme_rays(PolyhedralCone.full(7))
    assert len(extreme_rays(PolyhedralCone.full(7), max_dim=7).lineality) == 7


def test_sample_cone_directions() -> None:
    k = PolyhedralCone(-np.eye(2), None, 2)
    first = sample_cone_directions(k, 20, seed=3)
    second = sample_cone_directions(k, 20, seed=3)
    assert len(first) == 20
    assert all(close(a, b) for a, b in zip(first, second))
    assert all(membership(k, w) and close(np.linalg.norm(w), 1.0) for w in first)
    assert sample_cone_directions(PolyhedralCone([[1.0], [-1.0]], None, 1), 5) == []


def test_lp_phase_one() -> None:
    result = lp_phase_one([[1.0, 1.0]], [1.0], None, None)
    assert result.feasible
    assert close(sum(result.point), 1.0)
    assert np.all(result.point >= 0)

    empty = lp_phase_one([[1.0, 1.0]], [-1.0], None, None)
    assert not empty.feasible
    assert empty.residual > 0


def test_lp_free_and_bounded_variables() -> None:
    point = lp_feasible(None, None, [[1.0]], [-1.0], bounds=[(None, None)])
    assert point is not None and point[0] <= -1.0 + 1e-9
    point = lp_feasible([[1.0, -1.0]], [0.5], None, None, bounds=[(0.0, 1.0), (None, 0.0)])
    assert point is not None
    assert 0.0 <= point[0] <= 1.0 + 1e-9 and point[1] <= 1e-9
    assert close(point[0] - point[1], 0.5)
    assert lp_feasible(None, None, [[1.0]], [-1.0], bounds=[(0.0, None)]) is None


def test_lp_guards() -> None:
    with pytest.raises(DimensionTooLarge):
        lp_phase_one(np.ones((1, 33)), [1.0], None, None)
    with pytest.raises(DimensionError):
        lp_phase_one([[1.0, 1.0]], [1.0, 2.0], None, None)


def test_indicator_whole_space() -> None:
    assert indicator_second_sub("whole_space", None, (1.0, 0.0), (0.0, 1.0)).total == 0.0
    assert indicator_second_sub("whole_space", None, (1.0, 0.0), (1.0, 0.0)).total == math.inf
    # a sublinear v̄ such as a subderivative
    result = indicator_second_sub("whole_space", None, lambda w: abs(w[0]), (0.0, 2.0))
    assert not result.infinite


def test_indicator_polyhedral() -> None:
    k = PolyhedralCone(-np.eye(2), None, 2)
    assert indicator_second_sub("polyhedral", k, None, (1.0, 1.0)).total == 0.0
    assert indicator_second_sub("polyhedral", k, None, (-1.0, 0.0)).infinite
    assert indicator_second_sub("polyhedral", k, (0.0, 1.0), (1.0, 1.0)).infinite
    with pytest.raises(TypeError):
        indicator_second_sub("polyhedral", None, None, (1.0, 1.0))


def test_indicator_nonlinear() -> None:
    data = NonlinearIndicatorData(
        PolyhedralCone.full(2), (2 * np.eye(2),), (np.array([0.5]), np.array([1.0]))
    )
    assert close(indicator_second_sub("nonlinear_polyhedral", data, None, (1.0, 1.0)).value, 4.0)
    bounded = NonlinearIndicatorData(PolyhedralCone(-np.eye(2), None, 2), data.hessians, data.multipliers)
    assert indicator_second_sub("nonlinear_polyhedral", bounded, None, (-1.0, 0.0)).infinite
    with pytest.raises(EmptyMultiplierSet):
        indicator_second_sub(
            "nonlinear_polyhedral", NonlinearIndicatorData(data.cone, data.hessians, ()), None, (1.0, 0.0)
        )
    with pytest.raises(ValueError):
        indicator_second_sub("conic", None, None, (1.0,))  # type: ignore
