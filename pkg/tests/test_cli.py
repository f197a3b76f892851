import numpy as np
import pytest

from hmmfv.cli import (ConfigError, build_config, config_hash, main,
                       parse_config)
from hmmfv.mesh import build_structured_triangular, mesh_to_text


# -- config parsing -------------------------------------------------------------

def test_empty_config_gives_reference_defaults():
    cfg = parse_config("", command="solve")
    assert cfg.dt == 1e-3
    assert cfg.T == 1.0
    assert cfg.a == 0.0
    assert cfg.b == 1.0
    assert cfg.mu1 == 0.25 and cfg.mu2 == 0.25
    assert cfg.kinetics == "brusselator"


def test_config_file_keys_and_comments():
    text = """
    # ladder for the error table
    levels = 8,16,32,64
    dt = 5e-4
    b = 2.5
    """
    cfg = parse_config(text, command="convergence")
    assert cfg.levels == (8, 16, 32, 64)
    assert cfg.dt == 5e-4
    assert cfg.b == 2.5


def test_negative_dt_names_the_key():
    with pytest.raises(ConfigError, match="dt"):
        build_config("solve", overrides=["dt=-1"])


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key 'dx'"):
        parse_config("dx = 0.1")


def test_bad_type_names_the_key():
    with pytest.raises(ConfigError, match="newton_max_iter"):
        parse_config("newton_max_iter = soon")


def test_override_precedence_cli_over_file():
    cfg = build_config("solve", file_text="dt = 1e-2\n", overrides=["dt=1e-4"])
    assert cfg.dt == 1e-4


def test_full_table_flag_switches_defaults():
    cfg = build_config("convergence", overrides=["full_table=true"])
    assert cfg.dt == 1e-4
    assert cfg.levels == (8, 16, 32, 64)
    # explicit values win over the flag
    cfg = build_config("convergence",
                       overrides=["full_table=true", "dt=1e-2", "levels=4,8"])
    assert cfg.dt == 1e-2
    assert cfg.levels == (4, 8)


def test_config_hash_stable_and_sensitive():
    a = build_config("solve")
    b = build_config("solve")
    c = build_config("solve", overrides=["dt=1e-2"])
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


# -- commands ----------------------------------------------------------------------

def test_mesh_info_counts(tmp_path, capsys):
    status = main(["mesh-info", "--level", "2", "--out", str(tmp_path)])
    assert status == 0
    out = capsys.readouterr().out
    assert "cells: 8" in out
    assert "faces: 16" in out
    assert "vertices: 9" in out
    assert "valid: True" in out
    assert (tmp_path / "manifest.txt").exists()


def test_mesh_info_from_file(tmp_path, capsys):
    mesh_file = tmp_path / "square.mesh"
    mesh_file.write_text(mesh_to_text(build_structured_triangular(1)))
    status = main(["mesh-info", "--mesh-file", str(mesh_file),
                   "--out", str(tmp_path / "out")])
    assert status == 0
    assert "cells: 2" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    status = main(["solve", "--set", "dt=0", "--out", str(tmp_path)])
    assert status == 2
    assert "dt" in capsys.readouterr().err


def test_solve_writes_fields_and_log(tmp_path):
    status = main(["solve", "--level", "2", "--out", str(tmp_path),
                   "--set", "dt=0.05", "--set", "T=0.1"])
    assert status == 0
    final_u = (tmp_path / "final_u.dat").read_text().strip().splitlines()
    assert len(final_u) == 8  # one row per cell
    assert len(final_u[0].split()) == 3
    log = (tmp_path / "run.log").read_text()
    assert "steps=2" in log
    assert "newton_total=" in log
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "config_hash:" in manifest
    assert "mesh_checksum[2]:" in manifest
    assert "numpy:" in manifest


def test_convergence_outputs_and_idempotence(tmp_path):
    args = ["convergence", "--set", "levels=2,4", "--set", "dt=0.05",
            "--set", "T=0.1"]
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0

    csv1 = (out1 / "errors.csv").read_text()
    csv2 = (out2 / "errors.csv").read_text()

    def strip_runtime(text):
        return [",".join(line.split(",")[:-1]) for line in text.splitlines()]

    # byte-identical numerics; the wall-clock column is the only variation
    assert strip_runtime(csv1) == strip_runtime(csv2)
    assert (out1 / "grad_u.dat").read_text() == (out2 / "grad_u.dat").read_text()
    assert (out1 / "grad_v.dat").read_text() == (out2 / "grad_v.dat").read_text()

    header = csv1.splitlines()[0]
    assert header.startswith("h,err_u,rate_u")
    errs = [float(line.split(",")[1]) for line in csv1.splitlines()[1:]]
    assert errs[0] > errs[1]


def test_diagnose_idempotence_is_byte_exact(tmp_path):
    # no wall-clock column here, so the whole file must reproduce exactly
    args = ["diagnose", "--set", "diag_levels=2,4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/diagnostics.csv").read_bytes() \
        == (tmp_path / "b/diagnostics.csv").read_bytes()


def test_diagnose_csv_trends(tmp_path):
    status = main(["diagnose", "--set", "diag_levels=2,4,8",
                   "--out", str(tmp_path)])
    assert status == 0
    lines = (tmp_path / "diagnostics.csv").read_text().strip().splitlines()
    assert lines[0] == "h,C_D,S_D[sin2d],W_D[linear_x],W_D[constant]"
    rows = [list(map(float, line.split(","))) for line in lines[1:]]
    s_vals = [r[2] for r in rows]
    w_vals = [r[3] for r in rows]
    assert s_vals[0] > s_vals[1] > s_vals[2]
    assert w_vals[0] > w_vals[1] > w_vals[2]
    for r in rows:
        assert r[4] <= 1e-10


def test_nine_significant_digits(tmp_path):
    main(["diagnose", "--set", "diag_levels=2", "--out", str(tmp_path)])
    first_row = (tmp_path / "diagnostics.csv").read_text().splitlines()[1]
    h_field = first_row.split(",")[0]
    assert h_field == f"{np.sqrt(2) / 2:.9g}"
