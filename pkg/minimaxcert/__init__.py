import importlib.metadata as _metalib

try:
    __version__ = _metalib.version(__package__ or __name__)
except _metalib.PackageNotFoundError:
    __version__ = "0.0.0.0.0"

from .certify import CertificateReport, CertifyOptions, CheckOutcome, Witness, certify
from .cli import RunReport, bundled_problem, load_problem, run
from .cones import Constraint, ConstraintSystem, PolyhedralCone, RaySet
from .exception import *  # All Exceptions
from .exprcore import Expr, Point, parse_expression
from .kkt import MinimaxProblem
from .oracle import ClassificationReport, GridSpec, OracleSession, TauProfile, classify, tau_profile

__all__ = [
    "MinimaxProblem",
    "Point",
    "Expr",
    "parse_expression",
    "Constraint",
    "ConstraintSystem",
    "PolyhedralCone",
    "RaySet",
    "CertifyOptions",
    "CertificateReport",
    "CheckOutcome",
    "Witness",
    "certify",
    "GridSpec",
    "OracleSession",
    "TauProfile",
    "ClassificationReport",
    "tau_profile",
    "classify",
    "RunReport",
    "load_problem",
    "bundled_problem",
    "run",
]
