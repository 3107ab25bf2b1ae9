import json
import math

import numpy as np
import pytest

from tangentia.cli import arrangement_to_json, main
from tangentia.closed_form import TETRAHEDRON

from conftest import random_arrangement, tetrahedron


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def tet_file(tmp_path):
    return write(tmp_path / "tet.json", arrangement_to_json(tetrahedron(1.45)))


def test_solve_tetrahedron_summary(tet_file, tmp_path, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", tet_file, "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "n=3 total=12 real=12 max=12"
    data = json.loads(out.read_text())
    assert len(data["records"]) == 12
    assert len(data["patch"]) == 3
    assert set(data["records"][0]) == {"p_re", "p_im", "v_re", "v_im", "real", "residual", "multiplicity"}


def test_solve_random_n4(tmp_path, capsys):
    f = write(tmp_path / "r.json", arrangement_to_json(random_arrangement(4, 11)))
    assert main(["solve", f, "--seed", "3"]) == 0
    line = capsys.readouterr().out.strip()
    fields = dict(kv.split("=") for kv in line.split())
    assert fields["n"] == "4" and fields["total"] == "24" and fields["max"] == "24"
    k = int(fields["real"])
    assert k % 2 == 0


def test_solve_wrong_arity(tmp_path, capsys):
    obj = {"n": 3, "spheres": [{"center": c.tolist(), "radius": 1.0} for c in TETRAHEDRON] + [{"center": [0, 0, 0], "radius": 1.0}]}
    assert main(["solve", write(tmp_path / "bad.json", obj)]) == 1
    assert "expected 2n-2 = 4 spheres" in capsys.readouterr().err


def test_solve_malformed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad)]) == 1
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    assert main(["solve", write(tmp_path / "x.json", {"n": 3})]) == 1


def test_solve_affinely_dependent(tmp_path, capsys):
    obj = {"n": 3, "spheres": [{"center": [0, x, y], "radius": 0.9} for x, y in ((1, 0), (-1, 0), (0, 1), (0, -1))]}
    assert main(["solve", write(tmp_path / "dep.json", obj)]) == 2
    assert "family" in capsys.readouterr().err


def test_verify_round_trip_and_corruption(tet_file, tmp_path, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", tet_file, "--out", str(out)]) == 0
    assert main(["verify", tet_file, str(out)]) == 0
    data = json.loads(out.read_text())
    data["records"][5]["p_re"][0] += 1e-3
    bad = write(tmp_path / "bad.json", data)
    capsys.readouterr()
    assert main(["verify", tet_file, bad]) == 4
    assert "line 5" in capsys.readouterr().out


def test_verify_other_arrangement(tet_file, tmp_path):
    out = tmp_path / "sol.json"
    main(["solve", tet_file, "--out", str(out)])
    other = write(tmp_path / "other.json", arrangement_to_json(random_arrangement(3, 2)))
    assert main(["verify", other, str(out)]) == 4


def test_verify_complex_round_trip(tmp_path):
    f = write(tmp_path / "r.json", arrangement_to_json(random_arrangement(4, 11)))
    out = tmp_path / "s.json"
    assert main(["solve", f, "--out", str(out)]) == 0
    assert main(["verify", f, str(out)]) == 0


def test_solve_deterministic(tet_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["solve", tet_file, "--out", str(a), "--seed", "5"])
    main(["solve", tet_file, "--out", str(b), "--seed", "5"])
    assert a.read_bytes() == b.read_bytes()


def test_seed_from_environment(tet_file, tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["solve", tet_file, "--out", str(a), "--seed", "42"])
    monkeypatch.setenv("TANGENTIA_SEED", "42")
    import importlib

    import tangentia.cli as cli

    importlib.reload(cli)
    cli.main(["solve", tet_file, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_solve_csv(tmp_path):
    f = write(tmp_path / "r.json", arrangement_to_json(random_arrangement(3, 8)))
    out = tmp_path / "sol.csv"
    assert main(["solve", f, "--patch", "index:2", "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("index,real,residual,multiplicity,p_re_0")
    assert len(lines) == 13


def test_coordinate_patch_misses_lines_at_infinity(tet_file, capsys):
    # four tetrahedron tangents have v_1 = 0 and lie outside the chart v_1 = 1
    assert main(["solve", tet_file, "--patch", "index:0"]) == 0
    assert capsys.readouterr().out.strip() == "n=3 total=8 real=8 max=12"
    assert main(["solve", tet_file, "--patch", "index:9"]) == 1
    assert main(["solve", tet_file, "--patch", "bogus"]) == 1


def test_family_thm4(capsys):
    assert main(["family", "thm4", "--n", "4", "--a", "2", "--r2", "2.45"]) == 0
    assert capsys.readouterr().out.strip() == "n=4 total=24 real=24 max=24"


def test_family_thm4_verify_homotopy(capsys):
    assert main(["family", "thm4", "--n", "4", "--a", "2", "--r2", "2.45", "--verify-homotopy"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_family_crosspolytope(capsys):
    assert main(["family", "crosspolytope", "--n", "4", "--r", "0.95"]) == 0
    assert "total=16 real=16" in capsys.readouterr().out


def test_family_perturbed_verify(capsys):
    assert main(["family", "perturbed", "--n", "4", "--a", "0.6", "--r", "1.2", "--verify-homotopy"]) == 0
    out = capsys.readouterr().out
    assert "total=24" in out and "PASS" in out


def test_family_discriminant_exit(capsys):
    assert main(["family", "thm4", "--n", "4", "--a", str(math.sqrt(2)), "--r2", "2.45"]) == 3
    assert main(["family", "crosspolytope", "--n", "4", "--r", "1"]) == 3


def test_bound(capsys):
    assert main(["bound", "3"]) == 0
    assert capsys.readouterr().out.strip() == "spheres=12 quadrics=32 grassmannian=2"
    assert main(["bound", "6", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == {"n": 6, "spheres": 96, "quadrics": 43008, "grassmannian": 42}
    assert main(["bound", "7"]) == 0
    assert capsys.readouterr().out.strip() == "spheres=192 quadrics=540672 grassmannian=132"
    assert main(["bound", "17"]) == 1


def test_region_csv(tmp_path):
    out = tmp_path / "region.csv"
    assert main(["region", "--n", "5", "--grid", "30", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "a,r,on_discriminant,all_real,count_real"
    assert len(rows) == 1 + 30 * 30
    real = [tuple(map(float, r.split(",")[:2])) for r in rows[1:] if r.split(",")[3] == "1"]
    assert real
    assert all(a * a > 2 and r * r < 3 for a, r in real)


def test_region_needs_n4():
    assert main(["region", "--n", "3"]) == 1


def test_quadrics_command(capsys):
    assert main(["quadrics", "--n", "3", "--seed", "1"]) == 0
    assert "isolated=32" in capsys.readouterr().out


def test_bad_arguments():
    assert main([]) == 1
    assert main(["solve"]) == 1
