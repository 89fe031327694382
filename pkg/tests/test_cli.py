import json
import subprocess
import sys

import pytest
import yaml
from hypothesis import given, strategies as st

from helpers import PROBLEMS, problem_text
from landaunf.cli import main, run_command
from landaunf.problem import ProblemError, load_problem, parse_problem, print_problem

EXAMPLES = sorted(p.stem for p in PROBLEMS.glob("*.yaml"))


def run_main(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def path(name):
    return str(PROBLEMS / f"{name}.yaml")


# diagnostics ----------------------------------------------------------------

@pytest.mark.parametrize(
    "old,new,line,col,words",
    [
        ("c1*J1", "c1*J1 + k99*J1", 14, 21, "unknown identifier 'k99'"),
        ('"x^2", degree: 2', '"x^2 + y", degree: 2', 12, 23, "not homogeneous"),
        ("truncation_degree: 6", "truncation_degree: 5", 15, 1, "even"),
        ("truncation_degree: 6", "truncation_degree: 6\ncolour: red", 16, 1, "unknown key"),
        ('"x^2", degree: 2', '"x^2", degree: 4', 12, None, "degree"),
    ],
)
def test_parse_errors_have_locations(old, new, line, col, words):
    text = problem_text("ex1")
    assert old in text
    with pytest.raises(ProblemError) as info:
        load_problem(text.replace(old, new, 1))
    err = info.value
    assert words in str(err)
    assert err.line == line
    if col is not None:
        assert err.column == col
    assert str(err).startswith(f"line {line}")


def test_yaml_syntax_error():
    with pytest.raises(ProblemError) as info:
        parse_problem("variables: [x, y\ninvariants: []\n")
    assert info.value.line is not None


def test_syntax_error_inside_an_expression():
    with pytest.raises(ProblemError) as info:
        load_problem(problem_text("ex1").replace('"c1*J1 +', '"c1*J1 + * ', 1))
    assert info.value.line == 14


# parse / print ----------------------------------------------------------------

@pytest.mark.parametrize("name", EXAMPLES)
def test_print_parse_round_trip_examples(name):
    pf = parse_problem(problem_text(name))
    text = print_problem(pf)
    again = parse_problem(text)
    assert again == pf
    assert print_problem(again) == text


ident = st.sampled_from(["x", "y", "z", "u", "w"])
pname = st.sampled_from(["c1", "c2", "k1", "k2", "k3", "a_b", "t7"])
num = st.one_of(st.integers(-5, 5).map(str), st.sampled_from(["1/2", "-3/4", "0.25"]))


@st.composite
def problem_files(draw):
    vars_ = draw(st.lists(ident, min_size=1, max_size=3, unique=True))
    params = draw(st.lists(pname, min_size=0, max_size=4, unique=True))
    quad = params[: draw(st.integers(0, len(params)))]
    m = len(vars_)
    atoms = st.sampled_from(vars_ + params + ["1", "2", "(" + vars_[0] + " + 1)"])
    expr = st.lists(atoms, min_size=1, max_size=4).map(lambda xs: " + ".join(xs))
    d = {
        "variables": vars_,
        "parameters": {"quadratic": quad, "higher": params[len(quad):]},
        "group": [{"name": "g", "matrix": [[draw(num) for _ in range(m)] for _ in range(m)]}],
        "invariants": [{"name": f"J{i + 1}", "expr": draw(expr), "degree": 2} for i in range(draw(st.integers(1, 3)))],
        "syzygies": draw(st.lists(st.sampled_from(["J1 = J1", "J1^2 = 0"]), max_size=1)),
        "potential": draw(expr),
        "truncation_degree": draw(st.sampled_from([2, 4, 6, 12])),
        "options": draw(
            st.fixed_dictionaries(
                {},
                optional={
                    "seed": st.integers(0, 99),
                    "kernel": st.sampled_from(["quadratic", "exact"]),
                    "numeric_params": st.dictionaries(pname, num, max_size=3),
                },
            )
        ),
    }
    return yaml.safe_dump(d, sort_keys=draw(st.booleans()))


@given(problem_files())
def test_print_parse_round_trip_random(text):
    pf = parse_problem(text)
    printed = print_problem(pf)
    assert parse_problem(printed) == pf
    assert print_problem(parse_problem(printed)) == printed


# byte stability ---------------------------------------------------------------

@pytest.mark.parametrize(
    "argv",
    [
        ["reduce", "-i", path("ex2")],
        ["verify", "-i", path("ex3"), "--trials", "20"],
        ["critical", "-i", path("ex1_reduced")],
        ["adapt", "-i", path("ex2")],
    ],
)
def test_structured_output_is_byte_stable(capsys, argv):
    argv = argv + ["--format", "structured"]
    a = run_main(capsys, argv)
    b = run_main(capsys, argv)
    assert a == b
    assert a[1].endswith("}\n") and a[1].isascii()
    json.loads(a[1])


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    res = subprocess.run(
        [sys.executable, "-m", "landaunf.cli", "reduce", "-i", path("ex1"), "--format", "structured", "-o", str(out)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    rep = json.loads(out.read_text())
    assert rep["reduced"] == "c1*J1 + c2*J2 + J1^3 + 3*J1^2*J2 + 3*J1*J2^2 + J2^3"


def test_stdin_input(capsys, monkeypatch):
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO(problem_text("ex1b")))
    code, out, _ = run_main(capsys, ["reduce", "-i", "-"])
    assert code == 0 and "reduced:" in out


# exit codes -------------------------------------------------------------------

def test_exit_codes(capsys, tmp_path):
    assert run_main(capsys, ["validate", "-i", path("ex5")])[0] == 0
    assert run_main(capsys, ["validate", "-i", str(tmp_path / "missing.yaml")])[0] == 1
    assert run_main(capsys, ["reduce", "-i", path("ex1"), "--degree", "7"])[0] == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text(problem_text("ex1").replace("truncation_degree: 6", "truncation_degree: 3"))
    code, _, err = run_main(capsys, ["reduce", "-i", str(bad)])
    assert code == 1 and "line 15" in err
    # ex3 carries no numeric parameters
    code, _, err = run_main(capsys, ["critical", "-i", path("ex3")])
    assert code == 1
    notjordan = tmp_path / "nj.yaml"
    notjordan.write_text(
        problem_text("ex2").split("options:")[0] + 'options:\n  adapt_matrix: [[1, 1, 0], [0, 1, 0], [0, 0, 1]]\n'
    )
    code, _, err = run_main(capsys, ["adapt", "-i", str(notjordan)])
    assert code == 2 and "Jordan" in err


def test_validate_reports_problems(capsys, tmp_path):
    f = tmp_path / "p.yaml"
    f.write_text(problem_text("ex2").replace('"J1*J2 = J3^2"', '"J1*J2 = 2*J3^2"'))
    code, out, _ = run_main(capsys, ["validate", "-i", str(f), "--format", "structured"])
    rep = json.loads(out)
    assert code == 1 and not rep["valid"]
    assert any("does not hold" in p for p in rep["problems"])


# subcommands ------------------------------------------------------------------

def test_pmatrix_example5():
    rep, code = run_command("pmatrix", problem_text("ex5"))
    assert code == 0
    assert rep["P"] == [
        ["4*J1", "8*J2", "12*J3"],
        ["8*J2", "4*J1*J2 + 12*J3", "8*J1*J3"],
        ["12*J3", "8*J1*J3", "4*J2*J3"],
    ]
    assert rep["Q"] == [["4*c1"]]


def test_reduce_example2_report():
    rep, code = run_command("reduce", problem_text("ex2"))
    assert code == 0 and rep["exact"]
    assert {"c1", "c2", "c1 + c2", "4*c1*c2 - c3^2"} <= set(rep["ledger"])
    assert rep["parameters"] == {"original": 15, "retained": 3, "eliminated": 12}
    assert [s["order"] for s in rep["steps"]] == [2, 4]


def test_critical_on_a_reduced_potential():
    rep, code = run_command("critical", problem_text("ex1_reduced"))
    assert code == 0
    pts = {tuple(round(v, 9) for v in p["x"]): p for p in rep["critical_points"]}
    assert set(pts) == {(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)}
    assert pts[(1.0, 0.0)]["stability"] == "minimum"
    assert rep["singular_locus"] == ["4*x*y"]


def test_critical_params_flag_overrides():
    rep, _ = run_command("critical", problem_text("ex1_reduced"), ["--params", "c1=-3,c2=-1"])
    assert rep["params"]["c2"] == "-1"
    stab = sorted(p["stability"] for p in rep["critical_points"])
    assert "maximum" in stab


def test_verify_report():
    rep, code = run_command("verify", problem_text("ex1"))
    assert code == 0
    assert rep["symbolic"] == {"ok": True, "nonzero_terms": 0}
    assert rep["numeric"]["ok"] and rep["numeric"]["trials"] == 100
    assert len(rep["transport"]) == 3


def test_invert_round_trip():
    rep, code = run_command("invert", problem_text("invert_map"))
    assert code == 0 and rep["round_trip_identity"]


def test_adapt_example2():
    rep, code = run_command("adapt", problem_text("ex2"))
    assert code == 0 and rep["source"] == "adapt_matrix" and rep["semisimple"]
    assert rep["P_n"] == [["0"] * 3] * 3


def test_adapt_numeric_fallback():
    text = problem_text("ex2").split("options:")[0]
    rep, code = run_command("adapt", text, ["--params", "c1=1,c2=2,c3=1"])
    assert code == 0 and rep["source"] == "numeric" and not rep["exact"]
    assert len(rep["eigenvalues"]) == 3


def test_text_format(capsys):
    code, out, _ = run_main(capsys, ["pmatrix", "-i", path("ex1")])
    assert code == 0
    assert out.startswith("command: pmatrix")
