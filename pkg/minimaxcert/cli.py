"""Command-line surface: problem files in, reports out.

    minimaxcert certify problem.json
    minimaxcert classify problem.json --box-only
    minimaxcert tau-profile problem.json --csv out.csv
    minimaxcert oracle problem.json --json
    minimaxcert corpus

Exit code 0 means the tool ran (the conclusion is in the report), 2 an input error and
3 an internal inconsistency.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import importlib.resources
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from ._types import SUBCOMMAND
from .certify import CertificateReport, CertifyOptions, certify
from .cones import Constraint, ConstraintSystem
from .exception import (
    DimensionError,
    ExpressionSyntaxError,
    InconsistencyError,
    InfeasiblePoint,
    MinimaxCertError,
    ProblemParseError,
    ValidationError,
    describe,
    exit_code_for,
)
from .exprcore import Point, parse_expression
from .kkt import MinimaxProblem
from .oracle import ArgmaxCalmness, ClassificationReport, GridSpec, OracleSession, TauProfile

__all__ = [
    "Flags",
    "LoadedProblem",
    "RunReport",
    "load_problem",
    "parse_problem",
    "bundled_problem",
    "bundled_names",
    "run",
    "main",
]

PROBLEM_FIELDS = frozenset(
    ("n", "m", "objective", "x_constraints", "y_constraints", "candidate", "box", "assume_mscq", "options")
)
CERTIFY_OPTIONS = ("tol", "strict_tol", "activity_tol", "eig_tol", "samples", "seed", "numeric")
GRID_OPTIONS = ("mesh", "kappa_max", "value_tol", "delta_max", "delta_min", "delta_count", "workers")


@dataclass(frozen=True)
class Flags:
    json: bool = False
    seed: int | None = None
    mesh: int | None = None
    samples: int | None = None
    workers: int | None = None
    csv: str | None = None
    box_only: bool = False
    verbose: int = 0


@dataclass(frozen=True, eq=False)
class LoadedProblem:
    problem: MinimaxProblem
    point: Point
    options: CertifyOptions
    grid: GridSpec
    digest: str
    source: str

    def with_flags(self, flags: Flags) -> LoadedProblem:
        """Command-line flags override the problem file's options."""
        options, grid = self.options, self.grid
        try:
            if flags.seed is not None:
                options = dataclasses.replace(options, seed=flags.seed)
            if flags.samples is not None:
                options = dataclasses.replace(options, samples=flags.samples)
            if flags.mesh is not None:
                grid = dataclasses.replace(grid, mesh_per_axis=flags.mesh)
            if flags.workers is not None:
                grid = dataclasses.replace(grid, workers=flags.workers)
        except ValueError as e:
            raise ValidationError(str(e)) from e
        return dataclasses.replace(self, options=options, grid=grid)


# Problem files ------------------------------------------------------------------------------


def bundled_names() -> list[str]:
    folder = importlib.resources.files("minimaxcert") / "problems"
    return sorted(p.name[: -len(".json")] for p in folder.iterdir() if p.name.endswith(".json"))


def bundled_problem(name: str) -> Path:
    """Path of a bundled problem; 'cubic', 'cubic.json' and 'examples/cubic.json' all resolve."""
    stem = Path(name).name
    stem = stem[: -len(".json")] if stem.endswith(".json") else stem
    path = Path(str(importlib.resources.files("minimaxcert") / "problems" / f"{stem}.json"))
    if not path.is_file():
        raise ProblemParseError(f"no bundled problem named '{stem}'")
    return path


def _resolve(path: str | Path) -> Path:
    path = Path(path)
    if path.is_file():
        return path
    try:
        return bundled_problem(str(path))
    except ProblemParseError:
        raise ProblemParseError(f"no such problem file: {path}") from None


def _expr(text: Any, field: str, n: int, m: int) -> Any:
    if not isinstance(text, str):
        raise ProblemParseError("expression must be a string", field)
    try:
        return parse_expression(text, n, m)
    except ExpressionSyntaxError as e:
        raise ProblemParseError(str(e), field) from e
    except DimensionError as e:
        raise ValidationError(f"{field}: {e}") from e


def _constraints(entries: Any, block: str, dim: int, n: int, m: int) -> ConstraintSystem:
    field = f"{block}_constraints"
    if not isinstance(entries, list):
        raise ProblemParseError("expected a list of constraints", field)
    out = []
    for i, entry in enumerate(entries):
        where = f"{field}[{i}]"
        if not isinstance(entry, dict) or set(entry) - {"expr", "kind"} or "expr" not in entry:
            raise ProblemParseError("expected {expr, kind}", where)
        kind = entry.get("kind", "le")
        if kind not in ("le", "eq"):
            raise ProblemParseError(f"kind must be 'le' or 'eq', not {kind!r}", where)
        out.append(Constraint(_expr(entry["expr"], f"{where}.expr", n, m), kind))
    try:
        return ConstraintSystem(block, dim, tuple(out))  # type: ignore[arg-type]
    except DimensionError as e:
        raise ValidationError(str(e)) from e


def _vector(values: Any, field: str, length: int) -> tuple[float, ...]:
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise ProblemParseError("expected a list of numbers", field)
    if len(values) != length:
        raise ValidationError(f"{field} has length {len(values)}, expected {length}")
    return tuple(float(v) for v in values)


def _options(raw: Any) -> tuple[CertifyOptions, GridSpec]:
    if not isinstance(raw, dict):
        raise ProblemParseError("expected an object", "options")
    unknown = set(raw) - set(CERTIFY_OPTIONS) - set(GRID_OPTIONS)
    if unknown:
        raise ProblemParseError(f"unknown option(s): {', '.join(sorted(unknown))}", "options")
    certify_kwargs = {k: raw[k] for k in CERTIFY_OPTIONS if k in raw}
    grid_kwargs: dict[str, Any] = {}
    if "mesh" in raw:
        grid_kwargs["mesh_per_axis"] = raw["mesh"]
    for key in ("kappa_max", "value_tol", "workers"):
        if key in raw:
            grid_kwargs[key] = raw[key]
    try:
        options = CertifyOptions(**certify_kwargs)
        if {"delta_max", "delta_min", "delta_count"} & set(raw):
            grid = GridSpec.geometric(
                raw.get("delta_max", 1e-1), raw.get("delta_min", 1e-4), raw.get("delta_count", 13), **grid_kwargs
            )
        else:
            grid = GridSpec(**grid_kwargs)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"invalid options: {e}") from e
    return options, grid


def parse_problem(text: str, source: str = "<string>") -> LoadedProblem:
    """Parse and validate the JSON text of a problem file."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemParseError(e.msg, line=e.lineno) from e
    if not isinstance(data, dict):
        raise ProblemParseError("a problem file must hold a JSON object")
    unknown = set(data) - PROBLEM_FIELDS
    if unknown:
        raise ProblemParseError(f"unknown field(s): {', '.join(sorted(unknown))}", sorted(unknown)[0])
    for key in ("n", "m", "objective", "candidate"):
        if key not in data:
            raise ProblemParseError("missing required field", key)
    n, m = data["n"], data["m"]
    for key, value in (("n", n), ("m", m)):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ProblemParseError("expected a positive integer", key)

    f = _expr(data["objective"], "objective", n, m)
    xs = _constraints(data.get("x_constraints", []), "x", n, n, m)
    ys = _constraints(data.get("y_constraints", []), "y", m, n, m)

    candidate = data["candidate"]
    if not isinstance(candidate, dict) or set(candidate) != {"x", "y"}:
        raise ProblemParseError("expected {x: [...], y: [...]}", "candidate")
    point = Point(_vector(candidate["x"], "candidate.x", n), _vector(candidate["y"], "candidate.y", m))

    box = data.get("box")
    if box is not None:
        if not isinstance(box, list) or not all(isinstance(b, list) for b in box):
            raise ProblemParseError("expected a list of [low, high] pairs", "box")
        box = tuple(_vector(b, f"box[{i}]", 2) for i, b in enumerate(box))

    assume_mscq = data.get("assume_mscq", False)
    if not isinstance(assume_mscq, bool):
        raise ProblemParseError("expected true or false", "assume_mscq")
    options, grid = _options(data.get("options", {}))

    try:
        prob = MinimaxProblem(n, m, f, xs, ys, assume_mscq, box)
        prob.check_point(point, options.activity_tol)
    except (DimensionError, InfeasiblePoint) as e:
        raise ValidationError(str(e)) from e
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    logging.debug(f"cli: parse_problem: {source} n={n} m={m} sha256={digest[:12]}")
    return LoadedProblem(prob, point, options, grid, digest, source)


def load_problem(path: str | Path) -> LoadedProblem:
    path = _resolve(path)
    return parse_problem(path.read_text(encoding="utf-8"), str(path))


# Reports ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class RunReport:
    command: SUBCOMMAND
    version: str
    digest: str
    resolution: str = ""
    certificate: CertificateReport | None = None
    classification: ClassificationReport | None = None
    profile: TauProfile | None = None
    argmax: ArgmaxCalmness | None = None

    @property
    def assumptions(self) -> tuple[str, ...]:
        return () if self.certificate is None else self.certificate.assumptions

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "version": self.version,
            "digest": self.digest,
            "resolution": self.resolution,
            "assumptions": list(self.assumptions),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "classification": None if self.classification is None else self.classification.to_dict(),
            "profile": None if self.profile is None else self.profile.to_dict(),
            "argmax": None if self.argmax is None else self.argmax.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunReport:
        def part(key: str, kind: Any) -> Any:
            return None if data.get(key) is None else kind.from_dict(data[key])

        return cls(
            data["command"],
            data["version"],
            data["digest"],
            data.get("resolution", ""),
            part("certificate", CertificateReport),
            part("classification", ClassificationReport),
            part("profile", TauProfile),
            part("argmax", ArgmaxCalmness),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunReport:
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        lines = []
        if self.certificate is not None:
            c = self.certificate
            lines.append(c.conclusion_line)
            lines += [f"  {name:<28} {outcome}" for name, outcome in c.checks()]
            if c.assumptions:
                lines.append("assumptions (not verified):")
                lines += [f"  - {a}" for a in c.assumptions]
            if c.notes:
                lines.append("notes:")
                lines += [f"  - {note}" for note in c.notes]
        if self.classification is not None:
            for name in ClassificationReport._VERDICTS:
                verdict = getattr(self.classification, name)
                lines.append(f"{name:<24} {verdict.value:<13} {verdict.evidence}")
        if self.profile is not None:
            lines.append("delta            tau_min          ratio")
            lines += [f"{r.delta:<16.6g} {r.tau_min:<16.6g} {r.ratio:.6g}" for r in self.profile.rows]
            lines.append(f"exponent={self.profile.fitted_exponent} verdict={self.profile.calm_verdict}")
        if self.argmax is not None:
            lines.append(f"argmax calmness estimate kappa={self.argmax.kappa_hat:.6g}")
        if self.resolution:
            lines.append(f"resolution: {self.resolution}")
        lines.append(f"minimaxcert {self.version} sha256:{self.digest}")
        return "\n".join(lines) + "\n"


# Subcommands --------------------------------------------------------------------------------


def _execute(command: SUBCOMMAND, loaded: LoadedProblem, flags: Flags) -> RunReport:
    report = RunReport(command, __version__, loaded.digest)
    prob, p = loaded.problem, loaded.point
    if command == "certify":
        return dataclasses.replace(report, certificate=certify(prob, p, loaded.options))
    session = OracleSession(prob, p, loaded.grid)
    report = dataclasses.replace(report, resolution=loaded.grid.resolution)
    if command == "tau-profile":
        profile = session.tau_profile()
        if flags.csv:
            profile.write_csv(flags.csv)
        return dataclasses.replace(report, profile=profile)
    if command == "classify":
        return dataclasses.replace(report, classification=session.classify(flags.box_only))
    if command == "oracle":
        classification = session.classify(flags.box_only)
        return dataclasses.replace(
            report, classification=classification, profile=classification.profile, argmax=classification.argmax
        )
    raise ValueError(f"unknown subcommand {command!r}")


def _check_soundness(name: str, certificate: CertificateReport, classification: ClassificationReport) -> None:
    calm = classification.calm_local_minimax.value
    if certificate.conclusion == "CERTIFIED" and calm == "false":
        raise InconsistencyError(f"{name}: certified but the oracle finds the point not calm")
    if certificate.conclusion == "REFUTED" and calm == "true":
        raise InconsistencyError(f"{name}: refuted but the oracle finds the point calm")


def _corpus(flags: Flags) -> str:
    lines = []
    for name in bundled_names():
        loaded = load_problem(bundled_problem(name)).with_flags(flags)
        certificate = certify(loaded.problem, loaded.point, loaded.options)
        classification = OracleSession(loaded.problem, loaded.point, loaded.grid).classify()
        _check_soundness(name, certificate, classification)
        verdicts = " ".join(
            f"{v}={getattr(classification, v).value}" for v in ClassificationReport._VERDICTS
        )
        lines.append(f"{name:<12} {certificate.conclusion_line} | {verdicts}")
        logging.info(f"cli: corpus: {name} done")
    return "\n".join(lines) + "\n"


def run(command: SUBCOMMAND, path: str | Path | None, flags: Flags | None = None) -> tuple[int, str]:
    """Run a subcommand; returns (exit code, stdout text)."""
    flags = flags or Flags()
    logging.info(f"cli: run: {command} {path or ''}")
    try:
        if command == "corpus":
            return 0, _corpus(flags)
        if path is None:
            raise ProblemParseError(f"{command} needs a problem file")
        report = _execute(command, load_problem(path).with_flags(flags), flags)
    except MinimaxCertError as e:
        return exit_code_for(e), describe(e) + "\n"
    return 0, report.to_json() if flags.json else report.to_text()


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimaxcert", description="Certify and classify candidate minimax points."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("certify", "check first- and second-order optimality conditions"),
        ("oracle", "classify on meshes, with radius profile and argmax calmness"),
        ("classify", "classify on meshes"),
        ("tau-profile", "estimate the minimal radius function"),
        ("corpus", "run certify and classify on every bundled problem"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name != "corpus":
            p.add_argument("problem", help="problem file, or the name of a bundled problem")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--seed", type=int, help="seed for sampled directions")
        p.add_argument("--samples", type=int, help="number of sampled directions")
        p.add_argument("--mesh", type=int, help="mesh points per axis (odd)")
        p.add_argument("--workers", type=int, help="oracle worker threads")
        p.add_argument("-v", "--verbose", action="count", default=0)
        if name == "tau-profile":
            p.add_argument("--csv", metavar="PATH", help="write the profile as CSV")
        if name in ("classify", "oracle"):
            p.add_argument("--box-only", action="store_true", help="only the box-mesh verdicts")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(format="%(levelname)s:%(message)s", level=level)
    flags = Flags(
        json=args.json,
        seed=args.seed,
        mesh=args.mesh,
        samples=args.samples,
        workers=args.workers,
        csv=getattr(args, "csv", None),
        box_only=getattr(args, "box_only", False),
        verbose=args.verbose,
    )
    code, text = run(args.command, getattr(args, "problem", None), flags)
    (sys.stdout if code == 0 else sys.stderr).write(text)
    return code
