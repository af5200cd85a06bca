import io
import subprocess
import sys

import numpy as np
import pytest

from trefftz_poly.cli import main, read_config
from trefftz_poly.mesh_io import read_mesh


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def m80(tmp_path_factory):
    path = tmp_path_factory.mktemp("mesh") / "m80.poly"
    code, out = run("mesh", "--domain", "rect:10x2", "--cells", "80", "--seed", "42",
                    "--lloyd", "100", "-o", str(path))
    assert code == 0 and "cells 80" in out and "quality min" in out
    return path


def test_mesh_file_has_80_cells(m80):
    assert read_mesh(m80).n_cells == 80


def test_mesh_is_deterministic(m80, tmp_path):
    again = tmp_path / "again.poly"
    assert run("mesh", "--domain", "rect:10x2", "--cells", "80", "--seed", "42",
               "--lloyd", "100", "-o", str(again))[0] == 0
    assert again.read_bytes() == m80.read_bytes()


def test_mesh_several_sizes(tmp_path):
    code, out = run("mesh", "--domain", "annulus:1,2", "--cells", "20,40", "-o",
                    str(tmp_path / "a{n}.poly"))
    assert code == 0
    assert read_mesh(tmp_path / "a40.poly").n_cells == 40
    assert run("mesh", "--domain", "annulus:1,2", "--cells", "20,40", "-o",
               str(tmp_path / "a.poly"))[0] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["mesh", "--domain", "rect:10x2", "--cells", "0", "-o", "x.poly"],
        ["mesh", "--domain", "rect:10x2", "--cells", "80,40", "-o", "x{n}.poly"],
        ["mesh", "--cells", "80", "-o", "x.poly"],
        ["run", "--benchmark", "cantilever", "--method", "fem", "--mesh", "x"],
        ["converge", "--benchmark", "bridge"],
        ["verify-basis", "--kmax", "0"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(*argv)[0] == 1


def test_bad_domain_is_runtime_error(tmp_path):
    assert run("mesh", "--domain", "disk:1", "--cells", "5", "-o", str(tmp_path / "d.poly"))[0] == 2


def test_run_cantilever_ht(m80, tmp_path):
    code, out = run("run", "--benchmark", "cantilever", "--method", "ht", "--mesh", str(m80),
                    "--dump", str(tmp_path / "d.txt"))
    assert code == 0
    header, row = out.splitlines()
    assert header == "benchmark,method,n_elements,n_dof,h,l2_error,energy_error,strain_energy"
    vals = row.split(",")
    assert vals[:3] == ["cantilever", "ht", "80"]
    assert all(np.isfinite(float(v)) for v in vals[4:])
    dump = (tmp_path / "d.txt").read_text().splitlines()
    assert dump[0].startswith("#") and len(dump) == 1 + read_mesh(m80).n_nodes


def test_run_methods_share_ndof(m80, tmp_path):
    csv = tmp_path / "r.csv"
    for method in ("pfem", "ht"):
        assert run("run", "--benchmark", "cantilever", "--method", method, "--mesh", str(m80),
                   "--csv", str(csv))[0] == 0
    lines = csv.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("benchmark,")
    assert lines[1].split(",")[3] == lines[2].split(",")[3]


def test_run_missing_mesh(tmp_path, capsys):
    code, _ = run("run", "--benchmark", "cantilever", "--method", "ht", "--mesh",
                  str(tmp_path / "none.poly"))
    assert code == 2
    assert "FileNotFoundError" in capsys.readouterr().err


def test_run_mismatched_domain(m80, capsys):
    code, _ = run("run", "--benchmark", "plate_hole", "--method", "ht", "--mesh", str(m80))
    assert code == 2
    assert "does not match benchmark plate_hole" in capsys.readouterr().err


def test_run_shifted_rectangle_rejected(tmp_path, capsys):
    path = tmp_path / "shift.poly"
    run("mesh", "--domain", "rect:10x2@0,0", "--cells", "20", "-o", str(path))
    assert run("run", "--benchmark", "cantilever", "--method", "pfem", "--mesh", str(path))[0] == 2
    assert "outside" in capsys.readouterr().err


def test_converge_cantilever_both(tmp_path):
    csv = tmp_path / "c.csv"
    code, out = run("converge", "--benchmark", "cantilever", "--method", "both",
                    "--sizes", "80,160,320,640", "--seed", "7", "--csv", str(csv),
                    "--plot-prefix", str(tmp_path / "p"))
    assert code == 0
    rows = csv.read_text().splitlines()
    assert len(rows) == 1 + 8
    slopes = [ln for ln in out.splitlines() if "slope:" in ln]
    assert len(slopes) == 4
    assert {ln.split()[1] for ln in slopes} == {"ht", "pfem"}
    for method in ("ht", "pfem"):
        for col in ("l2_error", "energy_error"):
            data = (tmp_path / f"p_{method}_{col}.dat").read_text().splitlines()
            assert data[0].startswith(f"# cantilever {method} {col} slope: ") and len(data) == 5


def test_converge_single_size_and_determinism(tmp_path):
    outs = []
    for k in range(2):
        csv = tmp_path / f"s{k}.csv"
        code, out = run("converge", "--benchmark", "plate_hole", "--sizes", "30", "--csv", str(csv))
        assert code == 0
        assert "slope: n/a" in out
        outs.append(csv.read_bytes())
    assert outs[0] == outs[1]


def test_converge_rejects_decreasing_sizes():
    assert run("converge", "--benchmark", "cantilever", "--sizes", "160,80")[0] == 1


def test_config_overrides(tmp_path):
    cfg = tmp_path / "beam.cfg"
    cfg.write_text("# curved beam\nE = 1e4\nnu=0.25\nregime = plane_strain\n")
    assert read_config(cfg) == {"E": 1e4, "nu": 0.25, "regime": "plane_strain"}
    code, out = run("converge", "--benchmark", "circular_beam", "--method", "pfem",
                    "--sizes", "20", "--config", str(cfg))
    assert code == 0 and "circular_beam pfem energy_error slope: n/a" in out
    (tmp_path / "bad.cfg").write_text("E 1\n")
    assert run("converge", "--benchmark", "cantilever", "--sizes", "20",
               "--config", str(tmp_path / "bad.cfg"))[0] == 2
    (tmp_path / "typo.cfg").write_text("Young = 1\n")
    assert run("converge", "--benchmark", "cantilever", "--sizes", "20",
               "--config", str(tmp_path / "typo.cfg"))[0] == 2


def test_verify_basis_passes():
    code, out = run("verify-basis", "--kmax", "6", "--nu", "0.25", "--regime", "plane_strain")
    assert code == 0
    assert out.strip().endswith("all modes pass")
    assert "modes=23" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "trefftz_poly", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "trefftz-poly" in proc.stdout
