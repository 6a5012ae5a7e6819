import json

import pytest

from hochblocks import cutgraph
from hochblocks.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip().startswith("{") else None), out.err


def test_double_and_manifest(capsys):
    code, doc, _ = run(capsys, "hopf", "double", "--group", "Z2", "--char", "3")
    assert code == EXIT_OK
    m = doc["manifest"]
    assert m["field"] == {"p": 3, "k": 1}
    assert set(m) == {"command", "inputs", "field", "truncation", "seed", "version"}
    assert all(len(v) == 64 for v in m["inputs"].values())
    assert all(doc["result"]["checks"].values())


def test_output_is_deterministic(capsys):
    args = ("block", "compute", "--surface", "torus", "--group", "Z2", "--char", "2", "--truncate", "2")
    first = run(capsys, *args)[1]
    second = run(capsys, *args)[1]
    assert first == second
    assert first["result"]["betti"]["degrees"] == [4, 4, 4]


def test_factorizability_failure_exit_code(tmp_path, capsys):
    from hochblocks.groups import builtin_group
    from hochblocks.hopfcat import group_algebra

    path = tmp_path / "z3.json"
    path.write_text(json.dumps(group_algebra(builtin_group("Z3"), 5).to_json()))
    code, doc, _ = run(capsys, "hopf", "check", "--algebra", str(path))
    assert code == EXIT_FAIL
    assert doc["result"]["checks"]["factorizable"]["passed"] is False
    assert str(path) in doc["manifest"]["inputs"]


def test_surface_file_and_excision(tmp_path, capsys):
    path = tmp_path / "cyl.json"
    path.write_text(cutgraph.cylinder().dumps())
    code, doc, _ = run(capsys, "block", "excise", "--surface", str(path), "--plus", "C:1", "--minus", "C:0",
                       "--group", "Z2", "--char", "2", "--truncate", "2")
    assert code == EXIT_OK and doc["result"]["passed"]


def test_schema_error_reports_pointer(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"pieces": [{"id": "P", "legs": [{"eps": 3}]}], "cuts": [], "boundary": []}))
    code, _, err = run(capsys, "lego", "fiber", "--surface", str(path))
    assert code == EXIT_USAGE
    assert "/pieces/0/legs/0/eps" in err


def test_missing_field_in_algebra(tmp_path, capsys):
    path = tmp_path / "alg.json"
    path.write_text(json.dumps({"basis": ["1"]}))
    code, _, err = run(capsys, "hopf", "check", "--algebra", str(path))
    assert code == EXIT_USAGE and "/field" in err


@pytest.mark.parametrize("argv", [[], ["block"], ["dw", "compare", "--group", "Z2"], ["hopf", "check"],
                                  ["block", "compute", "--surface", "nowhere.json", "--group", "Z2", "--char", "2"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_inapplicable_move_is_usage_error(capsys):
    code, _, err = run(capsys, "lego", "lift", "--surface", "genus2-theta", "--move", "S:a")
    assert code == EXIT_USAGE and "handle" in err


def test_lego_and_dw_commands(capsys):
    code, doc, _ = run(capsys, "lego", "reach", "--from", "genus2-theta", "--to", "genus2-separated")
    assert code == EXIT_OK and doc["result"]["length"] == 2
    assert len(doc["manifest"]["inputs"]) == 2
    code, doc, _ = run(capsys, "dw", "compare", "--group", "Z2", "--char", "2", "--truncate", "2")
    assert code == EXIT_OK and doc["result"]["info"]["groupoid"] == [4, 4, 4]
    code, doc, _ = run(capsys, "block", "sl2z", "--group", "Z2", "--char", "3")
    assert code == EXIT_OK and len(doc["result"]["T"]) == 4


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["lego", "fiber", "--surface", "one-holed-torus", "--out", str(out)])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["result"]["checks"]["passed"]


def test_exhausted_budget_is_a_failure(capsys):
    code, doc, err = run(capsys, "suite", "acceptance", "--budget", "0")
    assert code == EXIT_FAIL
    assert len(doc["result"]["criteria"]) == 11
    assert all("budget" in c["detail"]["error"] for c in doc["result"]["criteria"])
    assert err.count("[FAIL]") == 11
