import json
from pathlib import Path

import numpy as np
import pytest

from kahler_john import schemas
from kahler_john.cli import ConfigError, main, parse_config

ROOT = Path(__file__).resolve().parents[1]


def _run(tmp_path, cfg, name="out", extra=()):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main(["--config", str(cfg_path), "--out", str(out), "--threads", "1", *extra])
    return code, out


def _validate_all(out):
    for f in out.glob("*.json"):
        schemas.validate_file(f)


def test_parse_config_defaults():
    cfg = parse_config('{"command":"solve","problem":"min","barrier":{"kind":"constant","c":0}}')
    assert cfg.n == 1 and cfg.problem == "min"
    opts = cfg.solver_options()
    assert opts.resolution == 64 and opts.cert_tol == 1e-6


def test_parse_config_sweep_example():
    cfg = parse_config('{"command":"sweep","family":"section10","radius":0.9}')
    assert cfg.family == "section10" and cfg.radius == 0.9 and cfg.step == 0.05


@pytest.mark.parametrize("text, key", [
    ('{"command":"nope"}', "command"),
    ('{"command":"solve","bogus":1}', "bogus"),
    ('{"command":"solve","n":"two","barrier":{"kind":"constant"}}', "n"),
    ('{"command":"solve","n":4,"barrier":{"kind":"constant"}}', "n"),
    ('{"command":"solve"}', "barrier"),
    ('{"command":"uniqueness","spectrum":[1,-1]," n":2}', " n"),
    ('{"command":"counterexample","n":2}', "n"),
    ('[1, 2]', "object"),
])
def test_parse_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(text)


def test_type_error_names_expected_type():
    with pytest.raises(ConfigError, match="integer"):
        parse_config('{"command":"solve","n":"two","barrier":{"kind":"constant"}}')


def test_missing_samples_file(tmp_path):
    text = json.dumps({"command": "solve", "barrier": {"kind": "samples", "file": "none.json"}})
    with pytest.raises(ConfigError, match="barrier.file"):
        parse_config(text, base_dir=str(tmp_path))


def test_exit_code_config_error(tmp_path, capsys):
    code, _ = _run(tmp_path, {"command": "nope"})
    assert code == 2
    assert "command" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2


def test_solve_artifacts_and_determinism(tmp_path):
    cfg = {"command": "solve", "problem": "min", "barrier": {"kind": "veronese", "degree": 2},
           "grid": {"resolution": 24}}
    code1, out1 = _run(tmp_path, cfg, "a")
    code2, out2 = _run(tmp_path, cfg, "b")
    assert code1 == code2 == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
    _validate_all(out1)
    man = json.loads((out1 / "manifest.json").read_text())
    assert man["exit_code"] == 0 and "report.json" in man["artifacts"]
    assert man["versions"]["kahler_john"]


def test_seed_override_recorded(tmp_path):
    cfg = {"command": "solve", "barrier": {"kind": "constant", "c": 0.1}, "grid": {"resolution": 16}}
    _, out = _run(tmp_path, cfg, extra=("--seed-override", "7"))
    assert json.loads((out / "manifest.json").read_text())["seeds"]["grid_seed"] == 7


def test_uncertified_exit_code(tmp_path):
    cfg = {"command": "solve", "barrier": {"kind": "veronese", "degree": 2, "coeffs": [1, 30, 0.5]},
           "grid": {"resolution": 16}, "solver": {"max_iter": 1, "trust_radius": 0.001}}
    code, out = _run(tmp_path, cfg)
    assert code == 3
    assert json.loads((out / "report.json").read_text())["certificate"]["verdict"] == "fail"


def test_runtime_error_exit_code(tmp_path, capsys):
    (tmp_path / "s.json").write_text(json.dumps({"points": [[[1, 0], [0, 0]]], "values": [0, 1]}))
    code, _ = _run(tmp_path, {"command": "solve", "barrier": {"kind": "samples", "file": "s.json"}})
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_certify_points_and_matrix(tmp_path):
    code, out = _run(tmp_path, {"command": "certify",
                                "points": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}, "p")
    assert code == 0
    code, out = _run(tmp_path, {"command": "certify", "points": [[[1, 0], [0, 0]]]}, "q")
    assert code == 3
    doc = json.loads((out / "certificate.json").read_text())
    assert abs(doc["residual"] - 1 / np.sqrt(2)) < 1e-12
    eye = {"re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}
    code, out = _run(tmp_path, {"command": "certify", "matrix": eye, "shift": 0.5,
                                "barrier": {"kind": "constant", "c": 0.5},
                                "grid": {"resolution": 16}}, "r")
    assert code == 0
    _validate_all(out)


def test_uniqueness_command(tmp_path):
    code, out = _run(tmp_path, {"command": "uniqueness", "n": 2, "spectrum": [1, -1, 0]})
    assert code == 0
    doc = json.loads((out / "uniqueness.json").read_text())
    assert doc["verdict"] == "holds"
    assert doc["witness"]["diag_im"] == [-2.0, 1.0, 1.0]
    _validate_all(out)


def test_geodesic_check_command(tmp_path):
    code, out = _run(tmp_path, {"command": "geodesic-check", "samples": 3})
    assert code == 0
    doc = json.loads((out / "hcma_residual.json").read_text())
    assert doc["passed"] and doc["max_residual"] <= 1e-4 and doc["perturbed_residual"] >= 1e-2
    _validate_all(out)


def test_sweep_command_thread_independent(tmp_path):
    cfg = {"command": "sweep", "family": "section10", "radius": 0.2, "step": 0.1,
           "grid": {"resolution": 24}}
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["--config", str(cfg_path), "--out", str(tmp_path / "t1"), "--threads", "1"]) == 0
    assert main(["--config", str(cfg_path), "--out", str(tmp_path / "t3"), "--threads", "3"]) == 0
    for name in ("sweep.json", "chi.csv", "laplacian.csv", "bridge.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t3" / name).read_bytes()
    _validate_all(tmp_path / "t1")


def test_sweep_command_holomorphic_family(tmp_path):
    fam = {"kind": "holomorphic_family", "T0": {"re": [[1, 0], [0, 1]]},
           "T1": {"re": [[0.2, 0], [0, -0.1]]}}
    code, out = _run(tmp_path, {"command": "sweep", "family": fam, "radius": 0.2, "step": 0.1,
                                "grid": {"resolution": 16}})
    assert code == 0


def test_counterexample_command(tmp_path):
    cfg = {"command": "counterexample", "radius": 0.2, "step": 0.1, "psh_stride": 2,
           "grid": {"resolution": 24}}
    code, out = _run(tmp_path, cfg)
    assert code == 0
    for name in ("chi.csv", "laplacian.csv", "psh_min_eig.csv", "summary.json"):
        assert (out / name).is_file()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["psh_min_eig"] <= -0.5 and summary["psh_min_eig_D0"] >= 1e-3
    _validate_all(out)


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    cfg = tmp_path / "c.json"
    cfg.write_text('{"command":"uniqueness","n":1,"spectrum":[1,-1]}')
    res = subprocess.run([sys.executable, "-m", "kahler_john", "--config", str(cfg),
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr


def test_published_schemas_match_package():
    docs = ROOT / "docs" / "schemas"
    for name in schemas.NAMES:
        published = json.loads((docs / f"{name}.schema.json").read_text())
        assert published == schemas.load(name)
