import json
import subprocess
import sys

import pytest

from conftest import PB, PF
from parawick import cli
from parawick.correlator import Charge, CorrelatorResult, FieldSpec, Mode, OpKind
from parawick.parser import ParseError, ValidationError, format_expression, parse_expression, parse_problem

PHI = {"phi": FieldSpec("phi", PB, Charge.NEUTRAL)}
CPHI = {"phi": FieldSpec("phi", PB, Charge.CHARGED)}


def problem_text(correlator, **extra):
    d = {"fields": [{"name": "phi", "statistics": "parabose", "charge": "neutral"}], "correlator": correlator}
    d.update(extra)
    return json.dumps(d, indent=2)


# -- expression grammar --------------------------------------------------------

def test_parse_two_point():
    ins = parse_expression("phi(x2) phi(x1)", PHI)
    assert [(i.label, i.adjoint) for i in ins] == [("x2", False), ("x1", False)]


def test_parse_charged_four_point():
    ins = parse_expression("phi*(x4) phi*(x3) phi(x2) phi(x1)", CPHI)
    assert [i.adjoint for i in ins] == [True, True, False, False]
    assert format_expression(ins) == "phi*(x4) phi*(x3) phi(x2) phi(x1)"


def test_psibar_alias():
    fields = {"psi": FieldSpec("psi", PF)}
    ins = parse_expression("psi(x2) psibar(x1)", fields)
    assert [i.adjoint for i in ins] == [False, True]
    with pytest.raises(ValidationError):
        parse_expression("phibar(x1)", CPHI)


def test_operator_string_kinds():
    fields = {"a": FieldSpec("a", PB, Charge.CHARGED)}
    ins = parse_expression("a_1 a_2 adag_2 adag_1", fields, Mode.OPERATOR_STRING)
    assert [i.op_kind for i in ins] == [OpKind.ANNIHILATOR] * 2 + [OpKind.CREATOR] * 2
    assert [i.label for i in ins] == ["1", "2", "2", "1"]


def test_duplicate_point_label():
    fields = {"phi": PHI["phi"], "chi": FieldSpec("chi", PB)}
    with pytest.raises(ValidationError) as e:
        parse_expression("phi(x1) chi(x1)", fields)
    assert (e.value.line, e.value.column) == (1, 13)


@pytest.mark.parametrize(
    "text, cls, column",
    [
        ("phi(x1) phi x2", ParseError, 13),
        ("phi(x1) $", ParseError, 9),
        ("phi(x1", ParseError, 7),
        ("chi(x1)", ValidationError, 1),
        ("phi**(x1)", ParseError, 5),
    ],
)
def test_expression_errors(text, cls, column):
    with pytest.raises(cls) as e:
        parse_expression(text, PHI)
    assert e.value.column == column


# -- problem files ---------------------------------------------------------------

def test_problem_json_error_location():
    with pytest.raises(ParseError) as e:
        parse_problem('{\n  "fields": [,]\n}')
    assert e.value.line == 2


def test_problem_unknown_key_location():
    with pytest.raises(ValidationError) as e:
        parse_problem('{\n  "correlator": "phi(x)",\n  "bogus": 1\n}')
    assert (e.value.line, e.value.column) == (3, 3)


def test_problem_expression_error_reports_its_line():
    text = problem_text("phi(x1) chi(x2)")
    with pytest.raises(ValidationError) as e:
        parse_problem(text)
    expected = next(k for k, line in enumerate(text.splitlines(), start=1) if '"correlator"' in line)
    assert e.value.line == expected


@pytest.mark.parametrize(
    "extra",
    [{"p": 0}, {"engine": "magic"}, {"mode": "weird"}, {"p": True},
     {"vertex": {"kind": "yukawa", "fields": ["psi", "phi"]}}],
)
def test_problem_validation(extra):
    with pytest.raises(ValidationError):
        parse_problem(problem_text("phi(x1) phi(x2)", **extra))


def test_vertex_point_clash():
    with pytest.raises(ValidationError):
        parse_problem(problem_text("phi(z) phi(x2)", vertex={"kind": "diagonal_power", "fields": ["phi"], "degree": 2}))


def test_problem_round_trip(problems_dir):
    for path in sorted(problems_dir.glob("*.json")):
        prob = parse_problem(path.read_text())
        again = parse_problem(prob.to_json())
        assert again == prob
        assert again.to_json() == prob.to_json()


# -- run / emit ------------------------------------------------------------------

def test_emit_examples():
    doc = cli.run(parse_problem(problem_text("phi(x2) phi(x1)", engine="both")))
    assert cli.emit(doc) == "p * iDF(x1-x2)\n# engines pairing/genfun: agree\n"
    doc = cli.run(parse_problem(problem_text("phi(x3) phi(x2) phi(x1)")))
    assert cli.emit(doc) == "0\n"
    doc = cli.run(parse_problem(problem_text("phi(x4) phi(x3) phi(x2) phi(x1)")))
    assert cli.emit(doc).splitlines()[0] == (
        "p^2 * iDF(x3-x4) * iDF(x1-x2) + (2p - p^2) * iDF(x2-x4) * iDF(x1-x3)"
        " + p^2 * iDF(x1-x4) * iDF(x2-x3)"
    )


def test_parafermi_at_p1(problems_dir):
    prob = parse_problem((problems_dir / "four_point_parafermi.json").read_text())
    doc = cli.run(prob, p=1)
    assert doc.status == cli.EXIT_OK
    assert sorted(v for v, _, _ in doc.result.at(1)) == [-1, 1]


def test_operator_string_oracle(problems_dir):
    doc = cli.run(parse_problem((problems_dir / "operator_string.json").read_text()))
    assert doc.oracle["status"] == "ok"
    assert doc.oracle["checks"][0]["matrix"][0] == pytest.approx(4)


def test_time_ordered_oracle(problems_dir):
    doc = cli.run(parse_problem((problems_dir / "four_point_charged.json").read_text()))
    assert doc.oracle["status"] == "ok" and len(doc.oracle["checks"]) == 2


def test_result_document_round_trip(problems_dir):
    for path in sorted(problems_dir.glob("*.json")):
        doc = cli.run(parse_problem(path.read_text()))
        d = json.loads(cli.emit(doc, "json"))
        back = cli.ResultDocument.from_dict(d)
        assert back.result == doc.result
        assert cli.emit(back, "json") == cli.emit(doc, "json")


def test_emit_is_deterministic(problems_dir):
    for path in sorted(problems_dir.glob("*.json")):
        outs = {cli.emit(cli.run(parse_problem(path.read_text())), fmt) for fmt in ("json",) for _ in range(3)}
        assert len(outs) == 1


def test_emit_unknown_format():
    with pytest.raises(ValueError):
        cli.emit(cli.run(parse_problem(problem_text("phi(a) phi(b)"))), "xml")


# -- exit codes ----------------------------------------------------------------------

def write(tmp_path, text):
    path = tmp_path / "problem.json"
    path.write_text(text)
    return str(path)


def test_exit_ok(tmp_path, capsys):
    assert cli.main(["eval", "--input", write(tmp_path, problem_text("phi(a) phi(b)"))]) == 0
    assert capsys.readouterr().out == "p * iDF(b-a)\n"


def test_exit_usage(tmp_path, capsys):
    assert cli.main(["eval", "--input", write(tmp_path, problem_text("phi(a) chi(b)"))]) == 1
    assert "ValidationError" in capsys.readouterr().err
    assert cli.main(["eval", "--input", str(tmp_path / "missing.json")]) == 1
    assert cli.main(["eval", "--input", write(tmp_path, problem_text("phi(a) phi(b)")), "--p", "0"]) == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["eval"])
    assert e.value.code == 1


def test_exit_mismatch(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "n_point", lambda product: CorrelatorResult())
    assert cli.main(["eval", "--input", write(tmp_path, problem_text("phi(a) phi(b)")), "--engine", "both"]) == 2


def test_exit_resource_limit(problems_dir, capsys):
    path = str(problems_dir / "operator_string.json")
    assert cli.main(["eval", "--input", path, "--max-dim", "10"]) == 3
    assert "dimension_limit" in capsys.readouterr().out


def test_genfun_needs_time_ordered(problems_dir):
    assert cli.main(["eval", "--input", str(problems_dir / "operator_string.json"), "--engine", "genfun"]) == 1


def test_console_script_subprocess(problems_dir):
    cmd = [sys.executable, "-m", "parawick.cli", "eval", "--input", str(problems_dir / "two_point.json"), "--format", "json"]
    runs = [subprocess.run(cmd, capture_output=True, text=True) for _ in range(2)]
    assert all(r.returncode == 0 for r in runs)
    assert runs[0].stdout == runs[1].stdout
    assert json.loads(runs[0].stdout)["terms"][0]["coefficient"] == [0, 1]
