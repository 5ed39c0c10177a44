import json
import os

import pytest

from ncleray.cli import main

SCEN = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "scenarios")


def scen(name):
    return os.path.join(SCEN, name)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_exit_codes(capsys):
    assert run(capsys, "validate", scen("trivial_filtered.json"))[0] == 0
    code, out, _ = run(capsys, "validate", scen("d_squared_nonzero.json"))
    assert code == 1 and "degree: 0" in out
    code, out, err = run(capsys, "validate", scen("bad_rational.json"))
    assert code == 2 and "1/0" in err and out == ""


def test_validate_dga(capsys):
    code, out, _ = run(capsys, "validate", scen("heisenberg_N1.json"), "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["ok"]
    assert [s["title"] for s in rep["sections"]] == ["algebra", "morphism", "module"]


def test_pages_needs_filtration(capsys):
    code, out, err = run(capsys, "pages", scen("no_filtration.json"))
    assert code == 2 and "filtration" in err


def test_pages_rmax_one(capsys):
    code, out, _ = run(capsys, "pages", scen("two_step.json"), "--rmax", "1", "--format", "json")
    grids = json.loads(out)["sections"][1]["grids"]
    assert code == 0 and list(grids) == ["E_1", "E_inf"]


def test_pages_trivial_filtration(capsys):
    code, out, _ = run(capsys, "pages", scen("trivial_filtered.json"), "--format", "json")
    rep = json.loads(out)
    assert rep["sections"][1]["grids"]["E_1"] == [[1]]
    assert rep["sections"][2]["cohomology"] == [1, 0]


def test_leray_identity(capsys):
    code, out, _ = run(capsys, "leray", "identity", "--window", "2", "--format", "json")
    rep = json.loads(out)
    pages = next(s for s in rep["sections"] if s["title"] == "pages")
    assert code == 0 and pages["grids"]["E_2"] == [[1, 1]]


def test_leray_collapse_witness(capsys):
    code, out, _ = run(capsys, "leray", scen("collapse_N1.json"))
    assert code == 1
    assert "wedge map is not an isomorphism" in out and "cell: (1, 1)" in out


def test_leray_file_model(capsys):
    code, out, _ = run(capsys, "leray", scen("heisenberg_N1.json"), "--format", "json")
    rep = json.loads(out)
    conv = rep["sections"][-1]
    assert code == 0 and conv["totals"] == [1, 3, 3, 1]


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["leray", "heisenberg", "--lambda", "1/0"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["pages", scen("two_step.json"), "--rmax", "0"])
    assert e.value.code == 2
    assert run(capsys, "leray", "identity", "--lambda", "1")[0] == 2
    assert run(capsys, "leray", scen("two_step.json"))[0] == 2
    assert run(capsys, "leray", "nowhere.json")[0] == 2


def test_verbose_adds_matrices(capsys):
    _, quiet, _ = run(capsys, "leray", "heisenberg", "--window", "1", "--lambda", "1")
    _, loud, _ = run(capsys, "leray", "heisenberg", "--window", "1", "--lambda", "1", "--verbose")
    assert "∇_0 =" in loud and "∇_0 =" not in quiet
    assert "    [1]" in loud


def test_output_and_emit(tmp_path, capsys):
    rpt, emit = tmp_path / "r.md", tmp_path / "f.json"
    code, out, _ = run(capsys, "leray", "heisenberg", "--window", "1", "-o", str(rpt), "--emit", str(emit))
    assert code == 0 and out == "" and rpt.read_text().startswith("# ncleray leray")
    code, out, _ = run(capsys, "pages", str(emit), "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["sections"][1]["grids"]["E_2"] == [[1, 1], [2, 2], [1, 1]]


def test_same_bytes_twice(capsys):
    for argv in (["pages", scen("two_step.json")], ["validate", scen("heisenberg_N1.json")],
                 ["leray", "identity", "--window", "2", "--format", "json"]):
        a = run(capsys, *argv)
        b = run(capsys, *argv)
        assert a == b
