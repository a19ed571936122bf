import csv
import json
import subprocess
import sys

import pytest

from optrecovery.cli import main
from optrecovery.config import kernel_from_config, load_config, parse_config
from optrecovery.errors import ConfigurationError, UnsupportedError

LIP = {"kind": "power", "c": 1, "alpha": 1}


def identity_config(**extra):
    cfg = {
        "problem": "identity",
        "domain": {"kind": "interval", "bounds": [0, 1]},
        "classes": [{"modulus": LIP, "points": [0.25, 0.75], "errors": 0}],
        "norm": {"Y": "L1", "psi": "l1"},
        "resolution": 400,
        "seed": 0,
        "trials": 200,
    }
    cfg.update(extra)
    return cfg


def write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_error_command(tmp_path):
    out = tmp_path / "out"
    assert main(["error", "--config", write(tmp_path, identity_config()), "--out", str(out)]) == 0
    rows = read_csv(out / "error.csv")
    assert rows[0] == ["problem", "n", "e_summary", "Y", "psi", "value", "est_quad_err"]
    assert float(rows[1][5]) == pytest.approx(0.125, abs=1e-9)


def test_verify_command(tmp_path):
    out = tmp_path / "out"
    assert main(["verify", "--config", write(tmp_path, identity_config()), "--out", str(out)]) == 0
    rows = read_csv(out / "verify.csv")
    assert rows[0] == ["trial", "clause", "value", "bound", "pass"]
    assert len(rows) == 1 + 200 + 3
    assert all(r[4] == "1" for r in rows[1:])


def test_fredholm_premise_exit_code(tmp_path, capsys):
    cfg = identity_config(problem="fredholm", params={"kernel": 1})
    cfg["classes"][0]["data"] = [1.0, 1.0]
    assert main(["solve", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "square-integrability" in capsys.readouterr().err


def test_metzler_exit_code(tmp_path, capsys):
    cfg = {
        "problem": "ode",
        "domain": {"kind": "interval", "bounds": [0, 1]},
        "classes": [{"data": [0, 0], "errors": [0, 0]},
                    {"modulus": LIP, "points": [0.5], "data": [0]},
                    {"modulus": LIP, "points": [0.5], "data": [0]}],
        "params": {"S": [[0, -1], [1, 0]]},
    }
    assert main(["error", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "S[0][1]" in capsys.readouterr().err


def test_config_and_io_errors(tmp_path):
    assert main(["error", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["error", "--config", str(bad)]) == 1
    cfg = identity_config(problem="heat")
    assert main(["error", "--config", write(tmp_path, cfg)]) == 1
    cfg = identity_config()
    cfg["classes"][0]["measurements"] = "nowhere.csv"
    assert main(["recover", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 1


def test_validate_command(tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "--config", write(tmp_path, identity_config()), "--out", str(out)]) == 0
    rows = read_csv(out / "validate.csv")
    assert rows[0] == ["class", "axiom", "t1", "t2", "lhs", "rhs", "pass"]
    cfg = identity_config()
    cfg["classes"][0]["modulus"] = {"kind": "table", "samples": [[0, 0], [1, 1], [2, 4]]}
    cfg["domain"]["bounds"] = [0, 2]
    cfg["classes"][0]["points"] = [0.5, 1.5]
    assert main(["validate", "--config", write(tmp_path, cfg), "--out", str(out)]) == 2
    failed = [r for r in read_csv(out / "validate.csv")[1:] if r[-1] == "0"]
    assert [r[1] for r in failed] == ["subadditive"]


def test_profiles_and_recover(tmp_path):
    cfg = identity_config(resolution=8)
    (tmp_path / "z.csv").write_text("index,z\n1,3.0\n0,2.0\n")
    cfg["classes"][0]["measurements"] = "z.csv"
    path = write(tmp_path, cfg)
    out = tmp_path / "p"
    for cmd in ("tau", "partition", "recover"):
        assert main([cmd, "--config", path, "--out", str(out)]) == 0
    tau = read_csv(out / "tau_0.csv")
    assert tau[0] == ["x0", "tau"] and len(tau) == 9
    assert float(tau[1][0]) == 0.0625 and float(tau[1][1]) == pytest.approx(0.1875)
    cells = read_csv(out / "partition_0.csv")
    assert cells[0] == ["x0", "cell_index"]
    assert [int(r[1]) for r in cells[1:]] == [1, 1, 1, 1, 2, 2, 2, 2]
    rec = read_csv(out / "recovered_0.csv")
    assert [float(r[1]) for r in rec[1:]] == [2.0] * 4 + [3.0] * 4


def test_bad_measurement_file(tmp_path):
    cfg = identity_config()
    (tmp_path / "z.csv").write_text("index,z\n0,1.0\n")
    cfg["classes"][0]["measurements"] = "z.csv"
    assert main(["recover", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 1
    (tmp_path / "z.csv").write_text("i,value\n0,1\n1,2\n")
    assert main(["recover", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 1


def test_flags_override(tmp_path):
    path = write(tmp_path, identity_config())
    out = tmp_path / "o"
    assert main(["verify", "--config", path, "--out", str(out), "--trials", "5", "--seed", "3", "--grid", "50"]) == 0
    assert len(read_csv(out / "verify.csv")) == 1 + 5 + 3
    assert main(["error", "--config", path, "--grid", "1"]) == 1


def test_solve_outputs(tmp_path):
    cfg = identity_config(problem="volterra", params={"kernel": {"kind": "expression", "expr": "exp(-(t - s))"},
                                                      "table_intervals": 50}, resolution=200)
    cfg["classes"][0]["data"] = [1.0, 1.0]
    out = tmp_path / "s"
    assert main(["solve", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    sol = read_csv(out / "solution.csv")
    assert sol[0] == ["x0", "value"]
    # Gamma = 1 for this kernel, so x(t) = 1 + t
    for x, v in sol[1:]:
        assert float(v) == pytest.approx(1 + float(x), abs=1e-4)
    assert float(read_csv(out / "error.csv")[1][5]) == pytest.approx(0.1875, abs=1e-6)


def test_arity_checked():
    cfg = identity_config()
    cfg["classes"] = cfg["classes"] * 2
    with pytest.raises(ConfigurationError, match="needs 1 class"):
        parse_config(cfg)
    with pytest.raises(UnsupportedError):
        parse_config({**cfg, "problem": "wave", "params": {"d": 4}})
    with pytest.raises(ConfigurationError):
        parse_config({**identity_config(), "norm": {"Y": "L2"}})


def test_kernel_expressions_are_restricted():
    k = kernel_from_config({"kind": "expression", "expr": "t * s + exp(-t)"})
    assert k(1.0, 2.0) == pytest.approx(2 + 0.36787944117144233)
    with pytest.raises(ConfigurationError):
        kernel_from_config({"kind": "expression", "expr": "__import__('os').system('true')"})
    with pytest.raises(ConfigurationError):
        kernel_from_config({"kind": "expression", "expr": "t +"})
    assert kernel_from_config(0.5) == 0.5


def test_poisson_boundary_defaults_to_circle(tmp_path):
    cfg = {
        "problem": "poisson-disk",
        "domain": {"kind": "disk", "radius": 1},
        "classes": [{"modulus": LIP, "points": [[0, 0]], "errors": 0.1},
                    {"modulus": LIP, "points": [[1, 0]], "errors": 0.1}],
    }
    loaded = load_config(write(tmp_path, cfg))
    assert type(loaded.methods[1].domain).__name__ == "Circle"


def test_module_entry_point(tmp_path):
    path = write(tmp_path, identity_config())
    res = subprocess.run([sys.executable, "-m", "optrecovery", "error", "--config", path, "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "error.csv").exists()
