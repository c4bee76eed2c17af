import json
import subprocess
import sys

import numpy as np
import pytest

from packd.cli import main
from packd.lattice import Lattice, Motif, PeriodicArrangement
from packd.catalog import make_body


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bodies_lists_catalog(capsys):
    code, out, _ = run(capsys, "bodies")
    assert code == 0 and "tetrahedron" in out and "cube_slab" in out
    code2, out2, _ = run(capsys, "--list-bodies")
    assert code2 == 0 and out2 == out


def test_dump_constants(capsys):
    code, out, _ = run(capsys, "dump-constants")
    assert code == 0
    assert out.splitlines()[0].startswith("name,")
    assert "keg_tetrahedron_Tstar" in out


def test_reproduce_bounds(capsys, tmp_path):
    path = tmp_path / "b.csv"
    assert main(["reproduce", "bounds", "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    json.loads(lines[0][len("# manifest: "):])
    assert lines[1] == "name,published_value,computed,relative_error,status"
    assert any(l.startswith("whitworth_lam_1_flagged") for l in lines)


def test_reproduce_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["reproduce", "bounds", "--out", str(a)]) == 0
    assert main(["reproduce", "bounds", "--out", str(b)]) == 0
    assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]


def test_construct_verify_roundtrip(tmp_path, capsys):
    arr, obj = tmp_path / "sq.json", tmp_path / "sq.obj"
    assert main(["construct", "square_pyramid", "--out", str(arr), "--export", str(obj)]) == 0
    data = json.loads(arr.read_text())
    assert data["provenance"]["exact_density"] == "8/15"
    assert data["provenance"]["constants"]["v1"] == "(1, 1/2)"
    text = obj.read_text()
    assert text.count("\nv ") > 0 and "\nf " in text
    out = tmp_path / "v.json"
    assert main(["verify", str(arr), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["result"] == "pass" and rep["density"] == pytest.approx(8 / 15)


def test_construct_hexagon_params(tmp_path):
    arr = tmp_path / "h.json"
    assert main(["construct", "hexagon_pair", "--param", "a=0", "--param", "b=0", "--out", str(arr)]) == 0
    assert json.loads(arr.read_text())["provenance"]["exact_density"] == "4/5"


def test_verify_rejects_crowded_cube(tmp_path, capsys):
    arr = PeriodicArrangement(Lattice(0.9 * np.eye(3)), Motif.single(make_body("cube")))
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"arrangement": arr.to_dict()}))
    code, _, _ = run(capsys, "verify", str(path))
    assert code == 1
    ok = PeriodicArrangement(Lattice(2 * np.eye(3)), Motif.single(make_body("cube")))
    path.write_text(json.dumps(ok.to_dict()))
    assert run(capsys, "verify", str(path))[0] == 0


def test_input_errors(tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text('{"lattice": [[1, 0')
    assert run(capsys, "verify", str(broken))[0] == 2
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 2
    code, _, err = run(capsys, "optimize", "--body", "dodecahedron")
    assert code == 2 and "dodecahedron" in err
    assert run(capsys, "construct", "nothing")[0] == 2
    assert run(capsys, "reproduce", "everything")[0] == 2
    assert run(capsys)[0] == 2


def test_optimize_roundtrip(tmp_path):
    out, obj = tmp_path / "t.json", tmp_path / "t.obj"
    assert main(["optimize", "--body", "tetrahedron", "--restarts", "4", "--seed", "1",
                 "--out", str(out), "--export", str(obj)]) == 0
    res = json.loads(out.read_text())
    assert res["certified"] and res["density"] >= 0.362
    assert res["manifest"]["seed"] == 1
    assert main(["verify", str(out)]) == 0
    assert obj.stat().st_size > 0


def test_optimize_body_from_file(tmp_path):
    src = tmp_path / "body.json"
    src.write_text(json.dumps({"vertices": [[0, 0, 0], [2, 0, 0], [0, 2, 0], [0, 0, 2]]}))
    out = tmp_path / "o.json"
    assert main(["optimize", "--body", str(src), "--restarts", "4", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["density"] >= 0.362
    assert str(src) in json.loads(out.read_text())["manifest"]["inputs"]


def test_optimize_lstar(tmp_path):
    out = tmp_path / "p.json"
    assert main(["optimize", "--body", "square_pyramid", "--mode", "lstar", "--restarts", "4",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["density"] >= 0.937


def test_console_script_module():
    r = subprocess.run([sys.executable, "-m", "packd.cli", "bodies"], capture_output=True, text=True)
    assert r.returncode == 0 and "octahedron" in r.stdout
