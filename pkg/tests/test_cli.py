import io
import subprocess
import sys
from pathlib import Path

import pytest

from solitonforge import cli
from solitonforge.errors import NonAffineResidual
from solitonforge.parser import parse_expr
from solitonforge import catalog

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "catalog_show_flat3": ["catalog", "show", "flat3"],
    "catalog_list": ["catalog", "list"],
    "curvature_gs3d": ["curvature", "gs3d"],
    "curvature_typeB": ["curvature", "typeB"],
    "solve_gs3d": ["soliton", "solve", "gs3d"],
    "solve_typeB_mu0": ["soliton", "solve", "typeB", "--pin", "mu=0"],
    "gradient_gs3d": ["gradient-check", "gs3d", "--field", "X3D"],
    "verify_typeB": ["soliton", "verify", "typeB", "--field", "X4D"],
    "oracle_flat3": ["oracle", "flat3", "--points", "10", "--seed", "1"],
}


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code, _ = cli.run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden_machine_reports(name):
    code, out, err = run(["--format", "machine"] + CASES[name])
    assert out == (GOLDEN / f"{name}.txt").read_text()
    assert err == ""
    assert out.endswith(f"exit_status = {code}\n")


def test_solve_gs3d_report():
    code, out, _ = run(["soliton", "solve", "gs3d"])
    assert code == 0
    assert "lambda: -2/mu" in out
    assert "free_constants: 3" in out


def test_solve_mu0_exit_and_certificate():
    code, out, _ = run(["soliton", "solve", "typeB", "--pin", "mu=0"])
    assert code == 1
    assert "status: infeasible" in out
    assert "certificate: 0 = " in out


def test_catalog_show_flat3_lists_identity():
    code, out, _ = run(["catalog", "show", "flat3"])
    assert code == 0
    for i in (1, 2, 3):
        assert f"g[{i}][{i}]: 1" in out
    assert "g[1][2]" not in out


def test_verify_with_negative_lambda_and_failure():
    code, out, _ = run(["soliton", "verify", "gs3d", "--field", "X3D", "--lambda", "-2/mu"])
    assert code == 0 and "verified: true" in out
    code, out, _ = run(["soliton", "verify", "gs3d", "--field", "X3D", "--lambda=-1/mu"])
    assert code == 1 and "residual[3][3]: -1" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["curvature", "nope"],
        ["soliton", "verify", "gs3d", "--field", "Y"],
        ["soliton", "verify", "gs3d", "--field", "X3D", "--lambda", "2/"],
        ["soliton", "solve", "gs3d", "--pin", "eps=2"],
        ["soliton", "solve", "gs3d", "--pin", "nu=1"],
        ["soliton", "solve", "gs3d", "--pin", "mu=abc"],
        ["oracle", "gs3d", "--points", "0"],
        ["frobnicate"],
    ],
)
def test_input_errors_exit_2(argv):
    code, out, err = run(argv)
    assert code == 2
    assert out == ""


def test_internal_error_exit_3(monkeypatch):
    def boom(*a, **k):
        raise NonAffineResidual("synthetic")

    monkeypatch.setattr(cli, "assemble_system", boom)
    code, _, err = run(["soliton", "solve", "gs3d"])
    assert code == 3 and "internal error" in err


def test_machine_values_parse_in_expression_grammar():
    _, out, _ = run(["--format", "machine", "soliton", "solve", "gs3d"])
    m = catalog.get("gs3d").model
    ext = m.extend(["C1", "C2", "C3"])
    for line in out.splitlines():
        key, _, value = line.partition(" = ")
        if key.startswith(("particular", "direction", "general", "lambda")) and key not in ("lambda_forced", "general_constants"):
            parse_expr(value, ext.ctx)


def test_determinism_byte_identical():
    argv = ["--format", "machine", "oracle", "gs3d", "--points", "15", "--seed", "7"]
    assert run(argv)[1] == run(argv)[1]
    argv = ["--format", "machine", "soliton", "solve", "typeB"]
    assert run(argv)[1] == run(argv)[1]


def test_model_file_path_and_env(tmp_path, monkeypatch):
    f = tmp_path / "plane.model"
    f.write_text("model plane\ndim 2\ncoords a b\nmetric {\n line = da^2 + db^2;\n}\n")
    code, out, _ = run(["curvature", str(f)])
    assert code == 0 and "scalar_curvature: 0" in out
    monkeypatch.setenv("SOLITON_FORGE_MODELS", str(tmp_path))
    code, out, _ = run(["catalog", "list"])
    assert "id: plane" in out


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "solitonforge", "--format", "machine", "catalog", "show", "flat3"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    assert res.stdout == (GOLDEN / "catalog_show_flat3.txt").read_text()
