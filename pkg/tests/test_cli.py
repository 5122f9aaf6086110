import json

import pytest
from pytest_mock import MockerFixture

from minimaxcert import __version__
from minimaxcert.certify import CertifyOptions
from minimaxcert.cli import (
    Flags,
    RunReport,
    bundled_names,
    bundled_problem,
    load_problem,
    main,
    parse_problem,
    run,
)
from minimaxcert.exception import ProblemParseError, ValidationError
from minimaxcert.oracle import GridSpec

TIMEOUT = 60

# fast oracle settings for command-line runs
FAST = Flags(mesh=51)

SADDLE = {
    "n": 1,
    "m": 1,
    "objective": "-y1^2 + x1^2",
    "candidate": {"x": [0], "y": [0]},
    "box": [[-1, 1], [-1, 1]],
    "options": {"delta_max": 0.1, "delta_min": 0.01, "delta_count": 5, "mesh": 51},
}


def problem_text(**changes) -> str:
    data = dict(SADDLE)
    data.update(changes)
    return json.dumps(data)


def write_problem(tmp_path, **changes):
    path = tmp_path / "problem.json"
    path.write_text(problem_text(**changes))
    return path


def test_bundled_problems() -> None:
    names = bundled_names()
    for name in ("cubic", "cubic_left", "cubic_mid", "ex3_1", "ex5_1", "ex5_2", "fair", "bilinear", "saddle"):
        assert name in names
    assert bundled_problem("cubic") == bundled_problem("cubic.json") == bundled_problem("examples/cubic.json")
    with pytest.raises(ProblemParseError):
        bundled_problem("nope")


def test_load_problem_layers_options() -> None:
    loaded = parse_problem(problem_text())
    assert loaded.problem.box == ((-1.0, 1.0), (-1.0, 1.0))
    assert loaded.options == CertifyOptions()
    assert loaded.grid == GridSpec.geometric(0.1, 0.01, 5, mesh_per_axis=51)
    assert len(loaded.digest) == 64
    flagged = loaded.with_flags(Flags(seed=7, samples=16, mesh=21, workers=2))
    assert flagged.options.seed == 7 and flagged.options.samples == 16
    assert flagged.grid.mesh_per_axis == 21 and flagged.grid.workers == 2
    assert flagged.grid.delta_values == loaded.grid.delta_values
    with pytest.raises(ValidationError):
        loaded.with_flags(Flags(mesh=20))


def test_parse_errors() -> None:
    with pytest.raises(ProblemParseError) as info:
        parse_problem("{\n  \"n\": 1,\n  oops\n}")
    assert info.value.line == 3
    with pytest.raises(ProblemParseError) as info:
        parse_problem(problem_text(colour="red"))
    assert info.value.field == "colour"
    with pytest.raises(ProblemParseError) as info:
        parse_problem(problem_text(options={"speed": 3}))
    assert info.value.field == "options"
    with pytest.raises(ProblemParseError) as info:
        parse_problem(problem_text(objective="x1 +"))
    assert info.value.field == "objective"
    with pytest.raises(ProblemParseError) as info:
        parse_problem(problem_text(y_constraints=[{"expr": "y1", "kind": "ge"}]))
    assert info.value.field == "y_constraints[0]"
    with pytest.raises(ProblemParseError):
        parse_problem(problem_text(n=0))
    with pytest.raises(ProblemParseError):
        parse_problem(json.dumps({"n": 1, "m": 1, "objective": "x1"}))


def test_validation_errors() -> None:
    with pytest.raises(ValidationError):
        parse_problem(problem_text(candidate={"x": [0, 0], "y": [0]}))
    with pytest.raises(ValidationError):
        parse_problem(problem_text(objective="x2*y1"))
    with pytest.raises(ValidationError):
        parse_problem(problem_text(y_constraints=[{"expr": "y1 - 1"}], candidate={"x": [0], "y": [2]}))
    with pytest.raises(ValidationError):
        parse_problem(problem_text(options={"samples": 0}))


def test_run_exit_codes(tmp_path) -> None:
    code, text = run("certify", write_problem(tmp_path))
    assert code == 0 and text.startswith("CERTIFIED")
    code, text = run("certify", write_problem(tmp_path, objective="x1 +"))
    assert code == 2 and text.startswith("The problem could not be read")
    code, text = run("certify", tmp_path / "missing.json")
    assert code == 2
    code, text = run("certify", None)
    assert code == 2
    # ȳ is a minimizer of f(x̄, ·): rejected input, not a defect
    code, text = run("tau-profile", write_problem(tmp_path, objective="y1^2 - x1^2"))
    assert code == 2 and "NotMaxSide" in text


def test_certify_refuted_line() -> None:
    code, text = run("certify", "cubic_mid")
    assert code == 0
    assert text.splitlines()[0] == "REFUTED (necessary condition fails: schur_necessary)"
    assert f"minimaxcert {__version__} sha256:" in text


def test_certify_json_roundtrip() -> None:
    code, text = run("certify", "fair", Flags(json=True))
    assert code == 0
    report = RunReport.from_json(text)
    assert report.command == "certify"
    assert report.certificate.conclusion == "CONSISTENT"
    assert report.to_json() == text
    data = json.loads(text)
    assert data["assumptions"] == list(report.certificate.assumptions)
    assert data["digest"] == load_problem("fair").digest


@pytest.mark.timeout(TIMEOUT)
def test_tau_profile_csv(tmp_path) -> None:
    csv = tmp_path / "profile.csv"
    code, text = run("tau-profile", write_problem(tmp_path), Flags(csv=str(csv)))
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "delta,tau_min,ratio"
    assert len(lines) == 7
    assert lines[-1].endswith("verdict=calm")
    assert "resolution: mesh=51" in text


@pytest.mark.timeout(TIMEOUT)
def test_oracle_and_classify(tmp_path) -> None:
    path = write_problem(tmp_path)
    code, text = run("oracle", path, Flags(json=True))
    assert code == 0
    report = RunReport.from_json(text)
    assert report.classification.calm_local_minimax.value == "true"
    assert report.profile is not None and report.argmax is not None
    code, text = run("classify", path, Flags(box_only=True))
    assert code == 0
    assert "skipped (box only)" in text
    assert "delta" not in text.splitlines()[0]


@pytest.mark.timeout(TIMEOUT)
def test_corpus(mocker: MockerFixture) -> None:
    mocker.patch("minimaxcert.cli.bundled_names", return_value=["saddle", "cubic_mid"])
    code, text = run("corpus", None, FAST)
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("saddle") and "CERTIFIED" in lines[0]
    assert lines[1].startswith("cubic_mid") and "calm_local_minimax=false" in lines[1]


@pytest.mark.timeout(TIMEOUT)
def test_corpus_inconsistency(mocker: MockerFixture) -> None:
    mocker.patch("minimaxcert.cli.bundled_names", return_value=["saddle"])
    refuted = mocker.MagicMock(conclusion="REFUTED")
    mocker.patch("minimaxcert.cli.certify", return_value=refuted)
    code, text = run("corpus", None, FAST)
    assert code == 3
    assert "refuted but the oracle finds the point calm" in text


def test_main(tmp_path, capsys) -> None:
    assert main(["certify", str(write_problem(tmp_path)), "--json"]) == 0
    out = capsys.readouterr().out
    assert RunReport.from_json(out).certificate.conclusion == "CERTIFIED"
    assert main(["certify", str(tmp_path / "missing.json")]) == 2
    captured = capsys.readouterr()
    assert captured.out == "" and "could not be read" in captured.err
    with pytest.raises(SystemExit):
        main(["--version"])
    assert __version__ in capsys.readouterr().out


def test_main_passes_flags(mocker: MockerFixture) -> None:
    fake = mocker.patch("minimaxcert.cli.run", return_value=(0, "ok\n"))
    assert main(["tau-profile", "ex3_1", "--seed", "3", "--mesh", "101", "--csv", "out.csv", "-vv"]) == 0
    command, path, flags = fake.call_args.args
    assert command == "tau-profile" and path == "ex3_1"
    assert flags == Flags(seed=3, mesh=101, csv="out.csv", verbose=2)
