import csv
import json
import math
from fractions import Fraction

import pytest

from ncwarp.cli import main, parse_config, to_json
from ncwarp.errors import ConfigError, FaithfulnessError, NonSkewError

DIAG = """
[algebra]
kind = "diagonal"
a = [1, 1]

[deformation]
theta = [[0, "1/10"], ["-1/10", 0]]
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_minimal(tmp_path):
    cfg = parse_config(write(tmp_path, DIAG))
    assert cfg.algebra_spec().a == (1, 1)
    assert cfg.theta().entries[0][1] == Fraction(1, 10)


def test_parse_errors(tmp_path):
    with pytest.raises(NonSkewError):
        parse_config(write(tmp_path, "[algebra]\na = [1, 1]\n[deformation]\ntheta = [[0, 0.1], [0.1, 0]]\n"))
    with pytest.raises(FaithfulnessError):
        parse_config(write(tmp_path, "[algebra]\na = [1, 0]\n"))
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, "[algebra\na = 1\n"))
    assert exc.value.code == "cli.config.syntax" and "line 1" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        parse_config(str(tmp_path / "missing.toml"))
    assert exc.value.code == "cli.config.missing-file"


def test_distinct_codes(tmp_path, capsys):
    codes = set()
    for text in (
        "[deformation]\ntheta = [[0, 1], [-1, 0]]\n",
        "[algebra]\na = [1, 1]\n[deformation]\ntheta = [[0, 0.1], [0.1, 0]]\n",
        "[algebra]\na = [1, 0]\n",
    ):
        code, _, err = run(capsys, "check-jacobi", "--config", write(tmp_path, text))
        assert code == 2
        codes.add(err.split("]")[0])
    assert len(codes) == 3


def test_check_jacobi(tmp_path, capsys):
    code, out, _ = run(capsys, "check-jacobi", "--config", write(tmp_path, DIAG))
    rep = json.loads(out)
    assert code == 0 and rep["residual"] == 0 and rep["schema_version"] == 1
    bad = '[algebra]\nkind = "extended2d"\na = 1\nf = 1\nh = 1\nr = 1\n'
    code, out, _ = run(capsys, "check-jacobi", "--config", write(tmp_path, bad))
    assert code == 1 and json.loads(out)["extended_constraints"] == [-1, 0, 0]


def test_check_jacobi_expression(tmp_path, capsys):
    code, out, _ = run(capsys, "check-jacobi", "--config", write(tmp_path, DIAG), "--expr", "dx0*x0")
    assert code == 0 and json.loads(out)["normal_form"] == "-i*dx0 + x0*dx0"


def test_deform(tmp_path, capsys):
    code, out, _ = run(capsys, "deform", "--config", write(tmp_path, DIAG))
    rep = json.loads(out)
    assert code == 0
    assert rep["signature"] == [1, -1]
    assert rep["exponents"] == [[0, -0.2], [0.2, 0]]


def test_metric_families(capsys):
    code, out, _ = run(capsys, "metric", "--family", "frw", "--H", "1/2")
    rep = json.loads(out)
    assert code == 0 and rep["round_trip_exact"] and rep["exponents"][1] == [0.5, 0, 0, 0]
    code, out, _ = run(capsys, "metric", "--family", "deformed-frw", "--b", "0.05")
    assert code == 0 and json.loads(out)["b"] == [0.05, 0, 0]


def test_curvature(capsys):
    code, out, _ = run(capsys, "curvature", "--family", "frw", "--H", "0.5", "--points", "3")
    rep = json.loads(out)
    assert code == 0 and rep["einstein"]["G00"] == "3*H**2/4"
    code, out, _ = run(
        capsys, "curvature", "--family", "deformed-frw", "--b", "0.05", "--a-of-t", "t^(2/3)", "--points", "3"
    )
    rep = json.loads(out)
    assert code == 0
    assert rep["field_equations"]["leading_order_in_b"]["e2"] == 2
    assert rep["oracle"]["max_relative_error"] <= 1e-6


def test_cosmology_dust(tmp_path, capsys):
    path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "cosmology", "--theta", "0", "--C", "1", "--t-end", "10", "--out", str(path))
    assert code == 0 and json.loads(out)["residuals"]["constraint"] <= 1e-8
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema_version: 1"
    rows = list(csv.DictReader(lines[1:]))
    assert list(rows[0]) == ["t", "a", "adot", "rho"]
    for r in rows:
        t = float(r["t"])
        if t >= 0.1:
            assert abs(float(r["a"]) / (1.5 * t) ** (2 / 3) - 1) <= 1e-6


def test_cosmology_from_config(tmp_path, capsys):
    cfg = write(tmp_path, "[cosmology]\ntheta = 0.5\nC = 1.0\nt_end = 5.0\n")
    code, out, _ = run(capsys, "cosmology", "--config", cfg)
    assert code == 0 and json.loads(out)["params"]["theta"] == 0.5
    code, _, err = run(capsys, "cosmology", "--config", write(tmp_path, DIAG, "other.toml"))
    assert code == 2 and "cli.config.missing-section" in err


def test_centrality(capsys):
    code, out, _ = run(capsys, "centrality", "--n", "3", "--theta", "0.1")
    rep = json.loads(out)
    assert code == 0 and math.isclose(rep["omega"], 10 / 3)
    assert rep["one_over_omega_theta"] == 3
    code, _, _ = run(capsys, "centrality", "--n", "1", "--theta", "0.1", "--strict")
    assert code == 0
    code, _, _ = run(capsys, "centrality", "--n", "1", "--theta", "0.1", "--omega", "20")
    assert code == 1


def test_verify_operators(capsys):
    code, out, _ = run(capsys, "verify-operators", "--N", "64", "--a", "1.0", "--q", "1.0", "--p", "0.3")
    rep = json.loads(out)
    assert code == 0 and rep["adjoint_action"] <= 1e-6 and rep["ccr"] <= 1e-10
    code, _, err = run(capsys, "verify-operators", "--N", "64", "--p", "3.0")
    assert code == 2 and "qoperators" in err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["metric", "--family", "nonsense"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_deterministic_output(tmp_path, capsys):
    cfg = write(tmp_path, DIAG)
    outs = []
    for k in range(2):
        target = tmp_path / f"r{k}.json"
        main(["curvature", "--family", "frw", "--H", "0.5", "--points", "4", "--seed", "3", "--out", str(target)])
        main(["deform", "--config", cfg, "--out", str(tmp_path / f"d{k}.json")])
        outs.append((target.read_bytes(), (tmp_path / f"d{k}.json").read_bytes()))
    assert outs[0] == outs[1]


def test_float_format():
    text = to_json({"b": 0.1, "a": [1.0, -0.0], "c": float("inf")})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "-0" not in text and '"inf"' in text
