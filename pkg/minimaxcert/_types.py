from typing import Literal, TypeAlias

__all__ = [
    "AXIS",
    "KIND",
    "SIDE",
    "EXACTNESS",
    "VERDICT",
    "MODE",
    "TRISTATE",
    "CALM_VERDICT",
    "INDICATOR_CASE",
    "SUBCOMMAND",
]

AXIS: TypeAlias = Literal["x", "y"]
KIND: TypeAlias = Literal["le", "eq"]
SIDE: TypeAlias = Literal["min", "max"]

EXACTNESS: TypeAlias = Literal["analytic", "numeric"]

VERDICT: TypeAlias = Literal["holds", "fails", "vacuous", "inconclusive"]
MODE: TypeAlias = Literal["proved", "sampled"]

TRISTATE: TypeAlias = Literal["true", "false", "undetermined"]
CALM_VERDICT: TypeAlias = Literal["calm", "not_calm", "undetermined"]

INDICATOR_CASE: TypeAlias = Literal["whole_space", "polyhedral", "nonlinear_polyhedral"]

SUBCOMMAND: TypeAlias = Literal["certify", "oracle", "classify", "tau-profile", "corpus"]
