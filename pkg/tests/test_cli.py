import json

import pytest
from click.testing import CliRunner

from vquad import moufang
from vquad.cli import main, run
from vquad.errors import TheoremViolation
from vquad.spaces import preset


def call(capsys, *args):
    code = run(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def w3_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("w3")
    assert run(["build", "--preset", "w3", "--out", str(d), "--dot"]) == 0
    return d


@pytest.fixture(scope="module")
def q5_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("q5")
    assert run(["build", "--preset", "q5plus3", "--out", str(d), "--cone", "0"]) == 0
    return d


def test_help():
    res = CliRunner().invoke(main, ["--help"])
    assert res.exit_code == 0
    for cmd in ("build", "verify", "quotient", "moufang"):
        assert cmd in res.output


def test_build_writes_space_and_graph(w3_dir):
    space = json.loads((w3_dir / "space.json").read_text())
    graph = json.loads((w3_dir / "graph.json").read_text())
    assert space["points"] == 40 and len(space["lines"]) == 40
    assert graph["n"] == 80
    assert (w3_dir / "graph.dot").read_text().startswith("graph veldkamp")
    assert len(json.loads((w3_dir / "catalog.json").read_text())["points"]) == 40


def test_build_q5plus3(q5_dir):
    assert json.loads((q5_dir / "space.json").read_text())["points"] == 130
    assert json.loads((q5_dir / "cone.json").read_text())["n"] == 120


def test_build_is_byte_identical(tmp_path, w3_dir):
    assert run(["build", "--preset", "w3", "--out", str(tmp_path), "--dot"]) == 0
    for f in ("space.json", "graph.json", "catalog.json", "lambda.json", "graph.dot"):
        assert (tmp_path / f).read_bytes() == (w3_dir / f).read_bytes()


def test_build_from_lambda_file(tmp_path, capsys):
    desc = tmp_path / "lam.json"
    desc.write_text(json.dumps(preset("q4_2").to_json()))
    code, out, _ = call(capsys, "build", "--lambda", str(desc), "--out", str(tmp_path / "o"))
    assert code == 0
    assert json.loads(out)["points"] == 15


@pytest.mark.parametrize(
    "args,code",
    [
        (["build", "--preset", "nope", "--out", "x"], 2),
        (["build", "--out", "x"], 2),
        (["build", "--preset", "w3", "--lambda", "y.json", "--out", "x"], 2),
        (["build", "--preset", "sp63", "--out", "x", "--max-vectors", "100"], 3),
        (["build", "--preset", "w3", "--out", "x", "--cone", "0"], 2),
        (["verify", "missing.json"], 2),
        (["verify", "x.json", "--suite", "bogus"], 2),
    ],
)
def test_error_exit_codes(args, code, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert call(capsys, *args)[0] == code


def test_malformed_json_is_a_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = call(capsys, "build", "--lambda", str(bad), "--out", str(tmp_path / "o"))
    assert code == 2 and "not valid JSON" in err


def test_verify_w3_all_pass(w3_dir, capsys):
    code, out, _ = call(capsys, "verify", str(w3_dir / "graph.json"), "--suite", "axioms")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert set(rep["checks"]) == {"VP1", "VP2", "VP3", "plump2"}
    assert rep["properties"] == {"flat": True, "generalized_polygon": True, "green": True}


def test_verify_cone_reports_plumpness_failure(q5_dir, capsys):
    code, out, _ = call(capsys, "verify", str(q5_dir / "cone.json"), "--suite", "all")
    rep = json.loads(out)
    assert all(rep["checks"][k]["passed"] for k in ("VP1", "VP2", "VP3"))
    assert not rep["checks"]["plump2"]["passed"]
    assert rep["properties"]["flat"] is False
    assert "common_opposite" in rep["skipped"]
    assert code == 1


def test_verify_corrupted_opposition(w3_dir, tmp_path, capsys):
    data = json.loads((w3_dir / "graph.json").read_text())
    data["opposition"]["0"] = data["opposition"]["0"][1:]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, out, _ = call(capsys, "verify", str(path), "--suite", "axioms")
    rep = json.loads(out)
    assert code == 1
    failed = [c for c in rep["checks"].values() if not c["passed"]]
    assert failed and all("witness" in c for c in failed)


def test_quotient_of_cone(q5_dir, tmp_path, capsys):
    code, out, _ = call(capsys, "quotient", str(q5_dir / "cone.json"), "--out", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["histogram"] == {"lines": {"9": 8}, "points": {"3": 16}}
    classes = json.loads((tmp_path / "classes.json").read_text())
    assert len(classes["pi"]) == 120
    assert json.loads((tmp_path / "quotient.json").read_text())["n"] == 24


def test_quotient_rejects_non_green(w3_dir, tmp_path, capsys):
    data = json.loads((w3_dir / "graph.json").read_text())
    line = str(data["partition"].index(1))
    data["opposition"][line] = [[0, 1]]
    path = tmp_path / "g.json"
    path.write_text(json.dumps(data))
    assert call(capsys, "quotient", str(path), "--out", str(tmp_path / "q"))[0] == 2


def test_moufang_certificate(capsys):
    code, out, _ = call(capsys, "--jobs", "1", "moufang", "--preset", "q5plus3")
    cert = json.loads(out)
    assert code == 0
    assert cert["moufang"]["moufang"] is True
    assert cert["commutators"]["[U1,U2]=1"] > 0


def test_moufang_d3(capsys):
    code, out, _ = call(capsys, "moufang", "--preset", "d3_3")
    assert code == 0
    assert "mu(x1(u)) conjugations" in json.loads(out)["d3"]


def test_theorem_violation_exit_code(monkeypatch, capsys):
    def broken(lam):
        raise TheoremViolation("commutator relation fails", (1, 2))

    monkeypatch.setattr(moufang, "verify_commutators", broken)
    code, _, err = call(capsys, "moufang", "--preset", "w3")
    assert code == 4 and "witness" in err
