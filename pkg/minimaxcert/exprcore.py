"""Scalar expressions in x1..xn, y1..ym and their exact one-sided expansions.

The expression class is polynomials over the variables closed under abs(·):

>>> f = parse_expression("-x1^2 + 2*x1*y1^3 - y1^6", n=1, m=1)
>>> evaluate(f, Point(x=(1.0,), y=(1.0,)))
0.0
>>> second_subderivative(parse_expression("x1*y1", 1, 1), Point((0.0,), (0.0,)), (1, 1)).value
2.0

Directional operations expand t -> f(p + t*w) as a truncated Taylor series in t. An abs node
takes the sign of the first nonzero coefficient of its argument, which keeps the first and
second coefficients exact at kinks.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from numbers import Number
from typing import Any, Iterator, Sequence, Union

import numpy as np

from ._types import AXIS, EXACTNESS
from .exception import DimensionError, ExpressionSyntaxError, NonFiniteValue, NonsmoothAtPoint

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Neg",
    "Sum",
    "Product",
    "Power",
    "Abs",
    "Point",
    "DerivativeResult",
    "parse_expression",
    "serialize",
    "evaluate",
    "evaluate_batch",
    "gradient",
    "hessian",
    "kinks",
    "subderivative",
    "subderivatives",
    "second_subderivative",
    "second_subderivatives",
    "separation_defect",
    "degree",
    "is_affine",
    "variables",
]

_ORDER = 2  # truncation order of the directional Taylor series

_NumType = Union[int, float]


@dataclass(frozen=True, eq=True)
class Expr:
    def __str__(self) -> str:
        return serialize(self)

    def __add__(self, other: Expr | _NumType) -> Expr:
        other = _as_expr(other)
        if other is NotImplemented:
            return NotImplemented
        return Sum((self, other))

    def __radd__(self, other: _NumType) -> Expr:
        other = _as_expr(other)
        if other is NotImplemented:
            return NotImplemented
        return Sum((other, self))

    def __sub__(self, other: Expr | _NumType) -> Expr:
        other = _as_expr(other)
        if other is NotImplemented:
            return NotImplemented
        return Sum((self, Neg(other)))

    def __rsub__(self, other: _NumType) -> Expr:
        other = _as_expr(other)
        if other is NotImplemented:
            return NotImplemented
        return Sum((other, Neg(self)))

    def __mul__(self, other: Expr | _NumType) -> Expr:
        other = _as_expr(other)
        if other is NotImplemented:
            return NotImplemented
        return Product((self, other))

    def __rmul__(self, other: _NumType) -> Expr:
        other = _as_expr(other)
        if other is NotImplemented:
            return NotImplemented
        return Product((other, self))

    def __neg__(self) -> Expr:
        return Neg(self)

    def __pow__(self, k: int) -> Expr:
        if not isinstance(k, int):
            return NotImplemented
        return Power(self, k)

    def __abs__(self) -> Expr:
        return Abs(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=True)
class Var(Expr):
    axis: AXIS
    index: int  # 1-based, as written in the text

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', not {self.axis!r}")
        if self.index < 1:
            raise DimensionError(f"variable index must be at least 1, got {self.axis}{self.index}")


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True, eq=True)
class Product(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True, eq=True)
class Power(Expr):
    base: Expr
    exponent: int

    def __post_init__(self) -> None:
        if isinstance(self.exponent, bool) or not isinstance(self.exponent, int):
            raise TypeError(f"exponent must be an int, not {type(self.exponent).__name__}")
        if self.exponent < 1:
            raise ValueError(f"exponent must be at least 1, got {self.exponent}")


@dataclass(frozen=True, eq=True)
class Abs(Expr):
    arg: Expr


def _as_expr(v: Any) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, Number) and not isinstance(v, bool):
        v = float(v)  # type: ignore
        return Const(v) if v >= 0 else Neg(Const(-v))
    return NotImplemented


@dataclass(frozen=True, eq=True)
class Point:
    x: tuple[float, ...] = ()
    y: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if not all(math.isfinite(v) for v in x + y):
            raise NonFiniteValue(f"point entries must be finite: x={x}, y={y}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_vector(cls, z: Sequence[float], n: int) -> Point:
        z = tuple(z)
        return cls(z[:n], z[n:])

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.y)

    @property
    def z(self) -> np.ndarray:
        return np.array(self.x + self.y, dtype=float)


@dataclass(frozen=True)
class DerivativeResult:
    value: float
    exactness: EXACTNESS = "analytic"
    error_bound: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.error_bound < 0:
            raise ValueError("error_bound must be nonnegative")
        if (self.error_bound == 0) != (self.exactness == "analytic"):
            raise ValueError("error_bound is 0 exactly for analytic results")


# Parsing ------------------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>[xy]\d+)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*^()])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if match is None or match.lastgroup is None:
            raise ExpressionSyntaxError(pos, f"unexpected character {text[pos]!r}")
        start = match.start(match.lastgroup)
        tokens.append(_Token(match.lastgroup, match.group(match.lastgroup), start))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over: expr := term (('+'|'-') term)*, term := unary ('*' unary)*,
    unary := '-' unary | power, power := primary ('^' INT)?,
    primary := NUMBER | VAR | 'abs' '(' expr ')' | '(' expr ')'."""

    def __init__(self, text: str, n: int | None, m: int | None) -> None:
        self._tokens = _tokenize(text)
        self._i = 0
        self._dims = {"x": n, "y": m}

    @property
    def _peek(self) -> _Token:
        return self._tokens[self._i]

    def _next(self) -> _Token:
        token = self._tokens[self._i]
        self._i += 1
        return token

    def _expect(self, text: str) -> _Token:
        token = self._next()
        if token.text != text:
            found = repr(token.text) if token.kind != "end" else "end of input"
            raise ExpressionSyntaxError(token.position, f"expected {text!r}, found {found}")
        return token

    def parse(self) -> Expr:
        e = self._expr()
        token = self._peek
        if token.kind != "end":
            raise ExpressionSyntaxError(token.position, f"unexpected {token.text!r}")
        return e

    def _expr(self) -> Expr:
        terms = [self._term()]
        while self._peek.text in ("+", "-"):
            sign = self._next().text
            t = self._term()
            terms.append(t if sign == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def _term(self) -> Expr:
        factors = [self._unary()]
        while self._peek.text == "*":
            self._next()
            factors.append(self._unary())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def _unary(self) -> Expr:
        if self._peek.text == "-":
            self._next()
            return Neg(self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._primary()
        if self._peek.text != "^":
            return base
        self._next()
        token = self._next()
        if token.kind != "number" or not token.text.isdigit():
            raise ExpressionSyntaxError(token.position, "'^' needs a positive integer literal")
        k = int(token.text)
        if k < 1:
            raise ExpressionSyntaxError(token.position, "exponent must be at least 1")
        return Power(base, k)

    def _primary(self) -> Expr:
        token = self._next()
        match token.kind:
            case "number":
                return Const(float(token.text))
            case "var":
                axis, index = token.text[0], int(token.text[1:])
                limit = self._dims[axis]
                if index < 1 or (limit is not None and index > limit):
                    raise DimensionError(
                        f"variable {token.text} at position {token.position} is out of range"
                        f" (declared {axis}1..{axis}{limit})"
                    )
                return Var(axis, index)  # type: ignore
            case "name":
                if token.text != "abs":
                    raise ExpressionSyntaxError(token.position, f"unknown function {token.text!r}")
                self._expect("(")
                arg = self._expr()
                self._expect(")")
                return Abs(arg)
            case "op" if token.text == "(":
                inner = self._expr()
                self._expect(")")
                return inner
            case "end":
                raise ExpressionSyntaxError(token.position, "unexpected end of input")
            case _:
                raise ExpressionSyntaxError(token.position, f"unexpected {token.text!r}")


def parse_expression(text: str, n: int | None = None, m: int | None = None) -> Expr:
    """Parse text into an expression tree; n and m bound the variable indices when given."""
    if not isinstance(text, str):
        raise TypeError(f"expression must be a str, not {type(text).__name__}")
    return _Parser(text, n, m).parse()


def serialize(e: Expr) -> str:
    """Canonical, fully parenthesized text; parse_expression(serialize(e)) == e for parsed trees."""
    match e:
        case Const(value):
            return repr(value) if value >= 0 else f"({value!r})"
        case Var(axis, index):
            return f"{axis}{index}"
        case Neg(arg):
            return f"(-{serialize(arg)})"
        case Sum(terms):
            return "(" + " + ".join(serialize(t) for t in terms) + ")"
        case Product(factors):
            return "(" + " * ".join(serialize(f) for f in factors) + ")"
        case Power(base, k):
            text = serialize(base)
            return f"({text})^{k}" if isinstance(base, Power) else f"{text}^{k}"
        case Abs(arg):
            return f"abs({serialize(arg)})"
    raise TypeError(f"not an expression: {e!r}")


# Structure ----------------------------------------------------------------------------------


def _children(e: Expr) -> tuple[Expr, ...]:
    match e:
        case Neg(arg) | Abs(arg):
            return (arg,)
        case Sum(terms):
            return terms
        case Product(factors):
            return factors
        case Power(base, _):
            return (base,)
    return ()


def _walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in _children(e):
        yield from _walk(c)


@lru_cache(maxsize=4096)
def variables(e: Expr) -> frozenset[tuple[str, int]]:
    """All (axis, index) pairs occurring in e."""
    return frozenset((v.axis, v.index) for v in _walk(e) if isinstance(v, Var))


def _check_dims(e: Expr, n: int, m: int) -> None:
    for axis, index in variables(e):
        if index > (n if axis == "x" else m):
            raise DimensionError(f"{axis}{index} is out of range for n={n}, m={m}")


@lru_cache(maxsize=4096)
def degree(e: Expr) -> float:
    """Polynomial degree; abs of a nonconstant argument has degree inf."""
    match e:
        case Const(_):
            return 0
        case Var(_, _):
            return 1
        case Neg(arg):
            return degree(arg)
        case Sum(terms):
            return max(degree(t) for t in terms)
        case Product(factors):
            return sum(degree(f) for f in factors)
        case Power(base, k):
            return k * degree(base)
        case Abs(arg):
            return 0 if degree(arg) == 0 else math.inf
    raise TypeError(f"not an expression: {e!r}")


def is_affine(e: Expr) -> bool:
    return degree(e) <= 1


# Evaluation ---------------------------------------------------------------------------------


def _eval(e: Expr, xs: Sequence[Any], ys: Sequence[Any]) -> Any:
    match e:
        case Const(value):
            return value
        case Var("x", index):
            return xs[index - 1]
        case Var(_, index):
            return ys[index - 1]
        case Neg(arg):
            return -_eval(arg, xs, ys)
        case Sum(terms):
            return reduce(operator.add, (_eval(t, xs, ys) for t in terms))
        case Product(factors):
            return reduce(operator.mul, (_eval(f, xs, ys) for f in factors))
        case Power(base, k):
            return _eval(base, xs, ys) ** k
        case Abs(arg):
            return np.abs(_eval(arg, xs, ys))
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, p: Point) -> float:
    _check_dims(e, p.n, p.m)
    with np.errstate(over="ignore", invalid="ignore"):
        value = float(_eval(e, np.array(p.x), np.array(p.y)))
    if not math.isfinite(value):
        raise NonFiniteValue(f"{serialize(e)} is not finite at {p}")
    return value


def evaluate_batch(e: Expr, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Evaluate e on broadcast arrays of points, X of shape (..., n) and Y of shape (..., m)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_dims(e, X.shape[-1], Y.shape[-1])
    xs = [X[..., i] for i in range(X.shape[-1])]
    ys = [Y[..., j] for j in range(Y.shape[-1])]
    shape = np.broadcast_shapes(X.shape[:-1], Y.shape[:-1])
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.broadcast_to(np.asarray(_eval(e, xs, ys), dtype=float), shape).copy()
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"{serialize(e)} is not finite on the whole batch")
    return values


# Gradient and Hessian -----------------------------------------------------------------------


def kinks(e: Expr, p: Point) -> tuple[Expr, ...]:
    """abs nodes of e whose argument vanishes at p."""
    _check_dims(e, p.n, p.m)
    xs, ys = np.array(p.x), np.array(p.y)
    return tuple(a for a in _walk(e) if isinstance(a, Abs) and _eval(a.arg, xs, ys) == 0)


def _jet(e: Expr, p: Point) -> tuple[float, np.ndarray, np.ndarray]:
    """(value, gradient, Hessian) of e at p by forward propagation of second-order jets."""
    d = p.n + p.m
    z = p.z

    def offset(v: Var) -> int:
        return v.index - 1 if v.axis == "x" else p.n + v.index - 1

    def jet(e: Expr) -> tuple[float, np.ndarray, np.ndarray]:
        match e:
            case Const(value):
                return value, np.zeros(d), np.zeros((d, d))
            case Var(_, _):
                g = np.zeros(d)
                g[offset(e)] = 1.0
                return z[offset(e)], g, np.zeros((d, d))
            case Neg(arg):
                v, g, H = jet(arg)
                return -v, -g, -H
            case Sum(terms):
                parts = [jet(t) for t in terms]
                return (
                    sum(v for v, _, _ in parts),
                    sum(g for _, g, _ in parts),
                    sum(H for _, _, H in parts),
                )
            case Product(factors):
                return reduce(_jet_mul, (jet(f) for f in factors))
            case Power(base, k):
                v, g, H = jet(base)
                dv = k * v ** (k - 1)
                H2 = dv * H
                if k >= 2:
                    H2 = H2 + k * (k - 1) * v ** (k - 2) * np.outer(g, g)
                return v**k, dv * g, H2
            case Abs(arg):
                v, g, H = jet(arg)
                s = math.copysign(1.0, v)
                return abs(v), s * g, s * H
        raise TypeError(f"not an expression: {e!r}")

    return jet(e)


def _jet_mul(
    a: tuple[float, np.ndarray, np.ndarray], b: tuple[float, np.ndarray, np.ndarray]
) -> tuple[float, np.ndarray, np.ndarray]:
    va, ga, Ha = a
    vb, gb, Hb = b
    return va * vb, va * gb + vb * ga, va * Hb + vb * Ha + np.outer(ga, gb) + np.outer(gb, ga)


def _smooth_jet(e: Expr, p: Point) -> tuple[float, np.ndarray, np.ndarray]:
    offending = kinks(e, p)
    if offending:
        raise NonsmoothAtPoint(tuple(serialize(a) for a in offending))
    return _jet(e, p)


def gradient(e: Expr, p: Point) -> np.ndarray:
    """Gradient over (x, y), length n+m. Raises NonsmoothAtPoint at an active kink."""
    return _smooth_jet(e, p)[1]


def hessian(e: Expr, p: Point) -> np.ndarray:
    """Symmetric Hessian over (x, y). Raises NonsmoothAtPoint at an active kink."""
    H = _smooth_jet(e, p)[2]
    return (H + H.T) / 2


# Directional expansions ---------------------------------------------------------------------


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.zeros_like(a)
    for i in range(_ORDER + 1):
        for j in range(_ORDER + 1 - i):
            c[i + j] += a[i] * b[j]
    return c


def _series_abs(a: np.ndarray) -> np.ndarray:
    sign = np.zeros(a.shape[1:])
    for k in range(_ORDER + 1):
        sign = np.where(sign == 0, np.sign(a[k]), sign)
    return sign * a


def _series(e: Expr, p: Point, W: np.ndarray) -> np.ndarray:
    """Coefficients of t^0.._ORDER of t -> e(p + t*w) for every row w of W, shape (_ORDER+1, N)."""
    z = p.z
    N = W.shape[0]

    def offset(v: Var) -> int:
        return v.index - 1 if v.axis == "x" else p.n + v.index - 1

    def series(e: Expr) -> np.ndarray:
        match e:
            case Const(value):
                s = np.zeros((_ORDER + 1, N))
                s[0] = value
                return s
            case Var(_, _):
                s = np.zeros((_ORDER + 1, N))
                s[0] = z[offset(e)]
                s[1] = W[:, offset(e)]
                return s
            case Neg(arg):
                return -series(arg)
            case Sum(terms):
                return reduce(operator.add, (series(t) for t in terms))
            case Product(factors):
                return reduce(_series_mul, (series(f) for f in factors))
            case Power(base, k):
                b = series(base)
                return reduce(_series_mul, [b] * k)
            case Abs(arg):
                return _series_abs(series(arg))
        raise TypeError(f"not an expression: {e!r}")

    return series(e)


def _directions(p: Point, W: Any) -> np.ndarray:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[1] != p.n + p.m:
        raise DimensionError(f"direction has length {W.shape[1]}, expected {p.n + p.m}")
    return W


def subderivatives(e: Expr, p: Point, W: Any) -> np.ndarray:
    """dψ(p)(w) for every row w of W."""
    _check_dims(e, p.n, p.m)
    return _series(e, p, _directions(p, W))[1]


def second_subderivatives(e: Expr, p: Point, W: Any) -> np.ndarray:
    """d²ψ(p)(w), i.e. twice the t² coefficient, for every row w of W."""
    _check_dims(e, p.n, p.m)
    return 2.0 * _series(e, p, _directions(p, W))[2]


def _richardson(e: Expr, p: Point, w: np.ndarray, order: int, step: float) -> DerivativeResult:
    """One-sided difference quotients at steps t, t/2, t/4 with two Richardson levels."""
    z = p.z
    f0 = evaluate(e, p)

    def f(t: float) -> float:
        return evaluate(e, Point.from_vector(z + t * w, p.n))

    def first(t: float) -> float:
        return (f(t) - f0) / t

    steps = (step, step / 2, step / 4)
    d1 = [first(t) for t in steps]
    slope = (4 * (2 * d1[2] - d1[1]) - (2 * d1[1] - d1[0])) / 3
    if order == 1:
        q = d1
        value = slope
    else:
        q = [2 * (f(t) - f0 - t * slope) / t**2 for t in steps]
        value = (4 * (2 * q[2] - q[1]) - (2 * q[1] - q[0])) / 3
    r1, r2 = 2 * q[1] - q[0], 2 * q[2] - q[1]
    bound = abs(r2 - r1) + np.finfo(float).eps * max(1.0, abs(value))
    return DerivativeResult(float(value), "numeric", float(bound))


def subderivative(
    e: Expr, p: Point, w: Any, numeric: bool = False, step: float = 1e-3
) -> DerivativeResult:
    """First-order one-sided directional derivative dψ(p)(w).
    With numeric=True a Richardson-extrapolated difference quotient is returned instead."""
    W = _directions(p, w)
    if numeric:
        return _richardson(e, p, W[0], 1, step)
    return DerivativeResult(float(subderivatives(e, p, W)[0]))


def second_subderivative(
    e: Expr, p: Point, w: Any, numeric: bool = False, step: float = 1e-3
) -> DerivativeResult:
    """Second-order one-sided directional derivative d²ψ(p)(w)."""
    W = _directions(p, w)
    if numeric:
        return _richardson(e, p, W[0], 2, step)
    return DerivativeResult(float(second_subderivatives(e, p, W)[0]))


def separation_defect(e: Expr, p: Point, u: Any, h: Any) -> float:
    """|dψ(p)(u,h) - d_xψ(p)(u) - d_yψ(p)(h)|."""
    u = np.asarray(u, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    if u.shape[0] != p.n or h.shape[0] != p.m:
        raise DimensionError(f"u and h must have lengths {p.n} and {p.m}")
    W = np.array(
        [
            np.concatenate([u, h]),
            np.concatenate([u, np.zeros(p.m)]),
            np.concatenate([np.zeros(p.n), h]),
        ]
    )
    joint, dx, dy = subderivatives(e, p, W)
    return float(abs(joint - dx - dy))
