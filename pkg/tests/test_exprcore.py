import math
from numbers import Number

import numpy as np
import pytest

from minimaxcert.exception import (
    DimensionError,
    ExpressionSyntaxError,
    NonFiniteValue,
    NonsmoothAtPoint,
)
from minimaxcert.exprcore import (
    Abs,
    Const,
    Neg,
    Point,
    Power,
    Product,
    Sum,
    Var,
    degree,
    evaluate,
    evaluate_batch,
    gradient,
    hessian,
    is_affine,
    kinks,
    parse_expression,
    second_subderivative,
    second_subderivatives,
    separation_defect,
    serialize,
    subderivative,
    subderivatives,
    variables,
)

ORIGIN = Point((0.0,), (0.0,))


def close(a, b, tol: float = 1e-9) -> bool:
    if isinstance(a, Number) and isinstance(b, Number):
        return math.isclose(a, b, abs_tol=tol)
    return all(math.isclose(i, j, abs_tol=tol) for i, j in zip(np.ravel(a), np.ravel(b), strict=True))


def test_parse_precedence() -> None:
    e = parse_expression("-x1^2 + 2*x1*y1^3")
    assert e == Sum(
        (
            Neg(Power(Var("x", 1), 2)),
            Product((Const(2), Var("x", 1), Power(Var("y", 1), 3))),
        )
    )
    assert parse_expression("abs(x1)") == Abs(Var("x", 1))
    assert parse_expression("(x1)") == Var("x", 1)


def test_parse_errors() -> None:
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("x1 + * y1")
    assert info.value.position == 5
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("x1^-2")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("sin(x1)")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("(x1 + y1")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("")
    with pytest.raises(TypeError):
        parse_expression(3)  # type: ignore


def test_parse_dimension_bounds() -> None:
    assert parse_expression("x2*y1", n=2, m=1)
    with pytest.raises(DimensionError):
        parse_expression("x3", n=2, m=1)
    with pytest.raises(DimensionError):
        parse_expression("y2", n=2, m=1)


def test_serialize_roundtrip() -> None:
    for text in (
        "-x1^2 + 2*x1*y1^3 - y1^6",
        "-abs(x1)^9 + 0.6*abs(x1)^3*abs(y1)^3 - abs(y1)^5",
        "y1*(-x1^3 + x1) + (1 - y1)*(-x1^3)",
        "((x1 + y1)^2)^2",
        "1e-3*x1",
    ):
        e = parse_expression(text)
        assert parse_expression(serialize(e)) == e
        assert str(e) == serialize(e)


def test_operators_build_trees() -> None:
    x, y = Var("x", 1), Var("y", 1)
    e = -(x**2) + 2 * x * y - 1
    assert evaluate(e, Point((2.0,), (3.0,))) == -4 + 12 - 1
    assert evaluate(abs(x - 5), Point((2.0,), ())) == 3
    with pytest.raises(ValueError):
        Power(x, 0)
    with pytest.raises(TypeError):
        Power(x, 1.5)  # type: ignore


def test_structure() -> None:
    e = parse_expression("x1*y2 + abs(y1)")
    assert variables(e) == frozenset({("x", 1), ("y", 2), ("y", 1)})
    assert degree(parse_expression("x1^3*y1")) == 4
    assert degree(e) == math.inf
    assert is_affine(parse_expression("2*x1 - 3*x2 + 1"))
    assert not is_affine(parse_expression("x1*x2"))
    assert is_affine(parse_expression("abs(2) * x1"))


def test_point() -> None:
    p = Point((1, 2), (3,))
    assert p.n == 2 and p.m == 1
    assert p.x == (1.0, 2.0)
    assert close(p.z, [1, 2, 3])
    assert Point.from_vector([1, 2, 3], 2) == p
    with pytest.raises(NonFiniteValue):
        Point((math.inf,), ())


def test_evaluate() -> None:
    f = parse_expression("-x1^2 + 2*x1*y1^3 - y1^6")
    assert evaluate(f, Point((1.0,), (1.0,))) == 0.0
    assert evaluate(f, Point((2.0,), (0.0,))) == -4.0
    with pytest.raises(DimensionError):
        evaluate(f, Point((1.0,), ()))
    with pytest.raises(NonFiniteValue):
        evaluate(parse_expression("x1^400"), Point((1e10,), ()))


def test_evaluate_batch_broadcasts() -> None:
    f = parse_expression("x1*y1 + x2")
    X = np.array([[1.0, 0.0], [2.0, 1.0]])
    Y = np.array([[1.0], [2.0], [3.0]])
    F = evaluate_batch(f, X[:, None, :], Y[None, :, :])
    assert F.shape == (2, 3)
    assert close(F, [[1, 2, 3], [3, 5, 7]])
    # an empty block broadcasts against the other one
    g = parse_expression("y1 - 1")
    assert close(evaluate_batch(g, np.zeros((3, 0)), Y), [0, 1, 2])
    assert close(evaluate_batch(Const(2.0), np.zeros((4, 1)), np.zeros((1, 1))), [2, 2, 2, 2])


def test_gradient_hessian_cubic() -> None:
    f = parse_expression("-y1^2 + x1*y1 + x1^3 + x1^4")
    p = Point((-0.5,), (-0.25,))
    assert close(gradient(f, p), [0, 0])
    H = hessian(f, p)
    assert close(H, [[6 * -0.5 + 12 * 0.25, 1], [1, -2]])
    assert close(H, H.T)


def test_gradient_rejects_kinks() -> None:
    f = parse_expression("abs(x1) + y1")
    with pytest.raises(NonsmoothAtPoint):
        gradient(f, ORIGIN)
    assert close(gradient(f, Point((-2.0,), (0.0,))), [-1, 1])
    assert kinks(f, ORIGIN) == (Abs(Var("x", 1)),)
    assert kinks(f, Point((1.0,), (0.0,))) == ()


def test_subderivative_abs() -> None:
    f = parse_expression("abs(x1)")
    assert subderivative(f, ORIGIN, (1, 0)).value == 1.0
    assert subderivative(f, ORIGIN, (-1, 0)).value == 1.0
    assert subderivative(f, ORIGIN, (0, 1)).value == 0.0
    assert subderivative(f, ORIGIN, (1, 0)).exactness == "analytic"


def test_second_subderivatives_example_nonsmooth() -> None:
    f = parse_expression("-abs(x1)^9 + 0.6*abs(x1)^3*abs(y1)^3 - abs(y1)^5")
    W = np.array([[1, 0], [0, 1], [1, 1], [-1, 2], [0.3, -0.7]])
    assert np.all(subderivatives(f, ORIGIN, W) == 0.0)
    assert np.all(second_subderivatives(f, ORIGIN, W) == 0.0)


def test_second_subderivative_kink_inside_square() -> None:
    # |x|·|y|: d² in direction (u, h) equals 2|u||h|
    f = parse_expression("abs(x1)*abs(y1)")
    assert second_subderivative(f, ORIGIN, (1, -1)).value == 2.0
    assert second_subderivative(f, ORIGIN, (-2, 3)).value == 12.0
    assert second_subderivative(f, ORIGIN, (1, 0)).value == 0.0


def test_subderivative_homogeneity_and_sign_flip() -> None:
    f = parse_expression("abs(x1 - y1)^2 + x1*abs(y1) - y1^3")
    neg = Neg(f)
    p = Point((0.5,), (0.5,))
    for w in ((1, 2), (-1, 0.5), (0.3, -0.3)):
        w = np.array(w, dtype=float)
        d1 = subderivative(f, p, w).value
        d2 = second_subderivative(f, p, w).value
        assert close(subderivative(f, p, 3 * w).value, 3 * d1)
        assert close(second_subderivative(f, p, 3 * w).value, 9 * d2)
        assert second_subderivative(neg, p, w).value == -d2


def test_numeric_subderivative_agrees() -> None:
    f = parse_expression("-x1^2 + 2*x1*y1^3 - y1^6")
    p = Point((0.3,), (0.2,))
    w = (0.6, -0.8)
    exact = second_subderivative(f, p, w)
    numeric = second_subderivative(f, p, w, numeric=True)
    assert numeric.exactness == "numeric"
    assert numeric.error_bound > 0
    assert close(numeric.value, exact.value, tol=1e-5)
    assert close(subderivative(f, p, w, numeric=True).value, subderivative(f, p, w).value, tol=1e-6)


def test_direction_dimension() -> None:
    with pytest.raises(DimensionError):
        subderivative(parse_expression("x1"), ORIGIN, (1, 0, 0))


def test_separation_defect() -> None:
    assert separation_defect(parse_expression("x1*y1 + x1^2"), ORIGIN, (1,), (1,)) == 0.0
    # |x1 + y1| does not separate at the origin
    assert close(separation_defect(parse_expression("abs(x1 + y1)"), ORIGIN, (1,), (-1,)), 2.0)
    with pytest.raises(DimensionError):
        separation_defect(parse_expression("x1"), ORIGIN, (1, 0), (1,))
