import json

import numpy as np
import pytest

from shape8.cli import ConfigError, build_config, main, read_csv

FAST = ["--quiet"]


def _run(tmp_path, *args):
    return main([args[0], *args[1:], "--output-dir", str(tmp_path), *FAST])


def test_precedence_defaults_file_env_flags(tmp_path):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"alpha": 1.2, "n": 32, "output_dir": "from-file"}))
    cfg = build_config("find-orbit", {}, env={})
    assert cfg.alpha == 1.5 and cfg.n == 256 and cfg.output_dir == "shape8-out"
    cfg = build_config("find-orbit", {"config": str(cfgfile)}, env={})
    assert (cfg.alpha, cfg.n, cfg.output_dir) == (1.2, 32, "from-file")
    cfg = build_config("find-orbit", {"config": str(cfgfile)}, env={"SHAPE8_OUTPUT_DIR": "env"})
    assert cfg.output_dir == "env"
    cfg = build_config("find-orbit", {"config": str(cfgfile), "n": 64, "output_dir": "flag"},
                       env={"SHAPE8_OUTPUT_DIR": "env"})
    assert (cfg.alpha, cfg.n, cfg.output_dir) == (1.2, 64, "flag")


def test_per_command_defaults():
    env = {}
    assert build_config("schubart", {}, env).alpha == 1.0
    ct = build_config("condition-test", {}, env)
    assert ct.levels == [128, 256, 512] and ct.power == 3.5
    assert build_config("deform-check", {}, env).alpha == 1.5


@pytest.mark.parametrize("flags", [{"alpha": 2.0}, {"alpha": 0.5}, {"m1": -1.0}, {"n": 4},
                                   {"m2": 2.0}])
def test_invalid_configs_raise(flags):
    with pytest.raises(ConfigError):
        build_config("find-orbit", flags, env={})


def test_unknown_config_key(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"alpah": 1.5}))
    with pytest.raises(ConfigError):
        build_config("find-orbit", {"config": str(f)}, env={})
    with pytest.raises(ConfigError):
        build_config("condition-test", {"alpha": 1.5}, env={})


def test_cli_exit_codes_on_bad_input(tmp_path, capsys):
    assert _run(tmp_path, "find-orbit", "--alpha", "2.5") == 1
    assert "alpha" in capsys.readouterr().err
    assert _run(tmp_path, "find-orbit", "--config", str(tmp_path / "missing.json")) == 1
    assert _run(tmp_path, "verify", "--orbit", str(tmp_path / "missing.json")) == 1
    assert _run(tmp_path, "verify") == 1
    with pytest.raises(SystemExit):
        main(["no-such-command"])


@pytest.fixture(scope="module")
def orbit_run(tmp_path_factory):
    outs = []
    for k in range(2):
        d = tmp_path_factory.mktemp(f"orbit{k}")
        code = main(["find-orbit", "--n", "64", "--starts", "2", "--output-dir", str(d), "--quiet"])
        outs.append((code, d))
    return outs


def test_find_orbit_outputs(orbit_run):
    code, d = orbit_run[0]
    assert code == 0
    for name in ["quarter.json", "orbit.json", "trajectory.csv", "shape.csv", "report.json",
                 "orbit.svg", "shape.svg"]:
        assert (d / name).is_file()
    report = json.loads((d / "report.json").read_text())
    assert report["passed"] and report["config"]["n"] == 64
    version, header, data = read_csv(d / "trajectory.csv")
    assert version == "shape8-trajectory-csv v1"
    assert header == ["t", "x1re", "x1im", "x2re", "x2im", "x3re", "x3im", "w1", "w2", "w3"]
    z = data[:, 1:7:2] + 1j * data[:, 2:7:2]
    inertia = np.sum(np.abs(z - z.mean(axis=1, keepdims=True)) ** 2, axis=1)   # equal masses
    np.testing.assert_allclose(np.linalg.norm(data[:, 7:], axis=1), inertia / 2, rtol=1e-12)
    version, header, _ = read_csv(d / "shape.csv")
    assert version == "shape8-shape-csv v1" and header == ["t", "w1", "w2", "w3"]


def test_find_orbit_is_deterministic(orbit_run):
    (_, a), (_, b) = orbit_run
    for name in ["quarter.json", "orbit.json", "trajectory.csv", "shape.csv", "report.json",
                 "orbit.svg"]:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_verify_round_trip(orbit_run, tmp_path):
    _, d = orbit_run[0]
    assert _run(tmp_path, "verify", "--orbit", str(d / "orbit.json")) == 0
    assert json.loads((tmp_path / "verify.json").read_text())["passed"]
    assert _run(tmp_path, "verify", "--orbit", str(d / "report.json")) == 1


def test_schubart_command(tmp_path):
    assert _run(tmp_path, "schubart", "--levels", "32,64", "--grad-tol", "1e-6") == 0
    data = json.loads((tmp_path / "schubart.json").read_text())
    assert data["command"] == "schubart"
    assert (tmp_path / "schubart.svg").is_file()
    version, _, _ = read_csv(tmp_path / "schubart_trajectory.csv")
    assert version == "shape8-trajectory-csv v1"


def test_condition_test_command(tmp_path):
    assert _run(tmp_path, "condition-test", "--levels", "32,64,128", "--m3-list", "1",
                "--grad-tol", "1e-6") == 0
    data = json.loads((tmp_path / "condition.json").read_text())
    assert data
    assert len(list(tmp_path.glob("condition_m3_*.txt"))) == 1


def test_deform_check_command(tmp_path):
    assert _run(tmp_path, "deform-check", "--per-decade", "3") == 0
    version, header, data = read_csv(tmp_path / "deformation.csv")
    assert version == "shape8-deformation-csv v1" and header == ["eps", "A1", "A2", "A3", "total"]
    assert len(data) == 10


def test_kepler_arc_command(tmp_path):
    assert _run(tmp_path, "kepler-arc", "--fractions", "0.5,0.9", "--n", "64") == 0
    version, header, data = read_csv(tmp_path / "kepler.csv")
    assert version == "shape8-kepler-csv v1"
    assert len(data) == 2
    assert json.loads((tmp_path / "kepler.json").read_text())
