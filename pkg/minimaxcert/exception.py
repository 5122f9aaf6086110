from __future__ import annotations

__all__ = [
    "MinimaxCertError",
    "InputError",
    "ExpressionSyntaxError",
    "DimensionError",
    "ProblemParseError",
    "ValidationError",
    "InfeasiblePoint",
    "NonsmoothAtPoint",
    "NonFiniteValue",
    "DimensionTooLarge",
    "NumericalFailure",
    "EmptyMultiplierSet",
    "SeparationHypothesisFailed",
    "NotMaxSide",
    "EmptyFeasibleBall",
    "InconsistencyError",
    "exit_code_for",
    "describe",
]


class MinimaxCertError(Exception):
    pass


class InputError(MinimaxCertError):
    pass


class ExpressionSyntaxError(InputError):
    def __init__(self, position: int, message: str) -> None:
        super().__init__(f"at position {position}: {message}")
        self.position = position
        self.message = message


class DimensionError(InputError):
    pass


class ProblemParseError(InputError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class ValidationError(InputError):
    pass


class InfeasiblePoint(MinimaxCertError):
    def __init__(self, index: int, violation: float, block: str = "") -> None:
        label = f"{block} constraint" if block else "constraint"
        super().__init__(f"{label} {index} violated by {violation:.3e}")
        self.index = index
        self.violation = violation
        self.block = block


class NonsmoothAtPoint(MinimaxCertError):
    def __init__(self, offending: tuple[str, ...]) -> None:
        super().__init__("kink at point in: " + ", ".join(offending))
        self.offending = offending


class NonFiniteValue(MinimaxCertError):
    pass


class DimensionTooLarge(MinimaxCertError):
    pass


class NumericalFailure(MinimaxCertError):
    pass


class EmptyMultiplierSet(MinimaxCertError):
    pass


class SeparationHypothesisFailed(MinimaxCertError):
    def __init__(self, defect: float, u: tuple[float, ...], h: tuple[float, ...]) -> None:
        super().__init__(f"separation defect {defect:.3e} at u={u}, h={h}")
        self.defect = defect
        self.u = u
        self.h = h


class NotMaxSide(MinimaxCertError):
    def __init__(self, witness: tuple[float, ...], excess: float) -> None:
        super().__init__(f"f(x̄, y) exceeds f(x̄, ȳ) by {excess:.3e} at y={witness}")
        self.witness = witness
        self.excess = excess


class EmptyFeasibleBall(MinimaxCertError):
    pass


class InconsistencyError(MinimaxCertError):
    pass


# Mapping of CLI exit codes, checked from the most specific class down
exc = {
    2: (
        InputError,
        "The problem could not be read",
        "The problem could not be read: {}",
    ),
    3: (
        InconsistencyError,
        "An internal inconsistency was detected",
        "An internal inconsistency was detected: {}",
    ),
}


# Raised on problems the tools cannot process, as opposed to a defect in the tools
_REJECTED_INPUT = (InfeasiblePoint, NotMaxSide, NonFiniteValue, DimensionTooLarge, EmptyFeasibleBall)


def exit_code_for(error: BaseException) -> int:
    for code, (e, _, _) in exc.items():
        if isinstance(error, e):
            return code
    if isinstance(error, _REJECTED_INPUT):
        return 2
    if isinstance(error, MinimaxCertError):
        return 3
    raise NotImplementedError(f"No exit code for {type(error).__name__}") from error


def describe(error: BaseException) -> str:
    for e, default, default_extra in exc.values():
        if isinstance(error, e):
            return default_extra.format(error) if str(error) else default
    return f"{type(error).__name__}: {error}"
