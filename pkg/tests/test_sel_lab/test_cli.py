import json

import numpy as np
import pytest

from sel_lab import __version__
from sel_lab.cli import COMMANDS, RunConfig, emit_report, main
from sel_lab.exceptions import ConfigError
from sel_lab.sel_path import SelPath, csv_text


def _payload(err: str) -> dict:
    lines = [line for line in err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def _summary(path) -> dict:
    data = json.loads((path / "summary.json").read_text(encoding="utf-8"))
    data.pop("timestamp")
    return data


def test_classify_writes_summary(out_dir):
    code = main(["classify", "--p", "0.25", "--q", "0.25", "--r", "0.25", "--s", "0.25", "--output", str(out_dir)])
    assert code == 0
    summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
    assert summary["version"] == __version__
    assert summary["command"] == "classify"
    assert summary["results"]["verdict"] == "existent"
    assert summary["results"]["subcase"] == "III"
    assert summary["config"]["exponents"] == {"p": 0.25, "q": 0.25, "r": 0.25, "s": 0.25}


def test_unknown_config_key_exits_2(tmp_path, out_dir, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"solver": {"tolerance": 1e-6}}), encoding="utf-8")
    assert main(["classify", "--config", str(config), "--output", str(out_dir)]) == 2
    payload = _payload(capsys.readouterr().err)
    assert payload["error"] == "ConfigError"
    assert payload["exit_code"] == 2
    assert not (out_dir / "summary.json").exists()


def test_missing_config_file_exits_2(tmp_path):
    assert main(["classify", "--config", str(tmp_path / "absent.json")]) == 2


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"command": "integrate"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"plotting": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"solver": {"epsilon_ratio": 2.0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"output": {"formats": ["xml"]}})
    config = RunConfig.from_dict({"command": "eigen", "domain": {"n": 101}})
    assert config.domain.n == 101
    assert config.domain.grading == "boundary_graded"
    assert config.to_dict()["command"] == "eigen"


@pytest.mark.parametrize("section, values", [
    ("domain", {"n": "abc"}),
    ("domain", {"n": 20.5}),
    ("solver", {"clamp": "yes"}),
    ("exponents", {"p": True}),
    ("domain", {"extents": [0.0, "1"]}),
    ("weight", {"A_w": "e"}),
])
def test_wrongly_typed_value_exits_2(tmp_path, out_dir, capsys, section, values):
    config = tmp_path / "typed.json"
    config.write_text(json.dumps({"command": "solve-scalar", section: values}), encoding="utf-8")
    assert main(["solve-scalar", "--config", str(config), "--output", str(out_dir)]) == 2
    payload = _payload(capsys.readouterr().err)
    assert payload["error"] == "ConfigError"
    assert not (out_dir / "summary.json").exists()


def test_typed_values_are_accepted():
    config = RunConfig.from_dict({"domain": {"kind": "rectangle", "extents": [1, 2], "n": [21, 41]},
                                  "weight": {"A_w": None}, "solver": {"max_iter": 80.0}})
    assert config.domain.n == [21, 41]
    assert config.solver.max_iter == 80.0


def test_divergent_weight_exits_4(out_dir, capsys):
    code = main(["solve-scalar", "--p", "0.5", "--q-w", "2", "--output", str(out_dir)])
    assert code == 4
    payload = _payload(capsys.readouterr().err)
    assert payload["error"] == "UnsupportedRegimeError"
    assert "q >= 2" in payload["result"]
    assert not (out_dir / "summary.json").exists()


def test_solve_scalar_artifacts(out_dir):
    code = main(["solve-scalar", "--p", "0.5", "--q-w", "0.5", "--n", "201", "--output", str(out_dir)])
    assert code == 0
    summary = _summary(out_dir)
    assert summary["results"]["converged"]
    assert summary["results"]["integral"] == "finite"
    header = (out_dir / "u.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "x,delta,interior,value"


def test_rates_from_csv(tmp_path, out_dir):
    delta = np.geomspace(1e-4, 1.0, 200)
    source = tmp_path / "layer.csv"
    source.write_text(csv_text(["delta", "value"], zip(delta.tolist(), (3 * delta ** 0.5).tolist())),
                      encoding="utf-8")
    code = main(["rates", "--input", str(source), "--model", "power", "--output", str(out_dir)])
    assert code == 0
    results = _summary(out_dir)["results"]
    assert results["fitted_power"] == pytest.approx(0.5, abs=1e-6)
    assert results["r_squared"] == pytest.approx(1.0)
    assert (out_dir / "rates.csv").read_text(encoding="utf-8").startswith("model,fitted_power,")


def test_rates_without_input_exits_2(out_dir):
    assert main(["rates", "--output", str(out_dir)]) == 2


def test_output_dir_precedence(tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    flag_dir = tmp_path / "from_flag"
    monkeypatch.setenv("SEL_OUTPUT_DIR", str(env_dir))
    assert main(["classify"]) == 0
    assert (env_dir / "summary.json").is_file()
    assert main(["classify", "--output", str(flag_dir)]) == 0
    assert (flag_dir / "summary.json").is_file()


def _small_sweep(tmp_path, name, axes):
    config = tmp_path / name
    config.write_text(json.dumps({"command": "sweep", "sweep": axes}), encoding="utf-8")
    return config


def test_runs_are_deterministic(tmp_path, monkeypatch):
    axis = {"start": 0.25, "stop": 1.0, "step": 0.25}
    config = _small_sweep(tmp_path, "sweep.json", {"p": axis, "q": axis, "r": axis, "s": axis})
    first, second = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("SEL_OUTPUT_DIR", str(first))
    assert main(["sweep", "--config", str(config)]) == 0
    monkeypatch.setenv("SEL_OUTPUT_DIR", str(second))
    assert main(["sweep", "--config", str(config)]) == 0
    assert _summary(first) == _summary(second)
    assert (first / "sweep.csv").read_bytes() == (second / "sweep.csv").read_bytes()
    assert _summary(first)["results"]["quads"] == 4 ** 4


def test_empty_sweep_writes_valid_files(tmp_path, out_dir):
    axis = [0.25]
    config = _small_sweep(tmp_path, "empty.json", {"p": [], "q": axis, "r": axis, "s": axis})
    assert main(["sweep", "--config", str(config), "--output", str(out_dir)]) == 0
    assert _summary(out_dir)["results"]["quads"] == 0
    lines = (out_dir / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("p,q,r,s")


def test_partial_report(tmp_path):
    out = SelPath(tmp_path)
    written = emit_report(out, RunConfig(command="solve-scalar"), {"error": {"error": "NewtonDivergenceError"}},
                          {"last_iterate.csv": "value\n1\n"}, partial=True)
    assert {p.name for p in written} == {"summary.json.partial", "last_iterate.csv.partial"}
    assert all(p.is_partial() for p in written)
    assert not (tmp_path / "summary.json").exists()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


CONFIGS = SelPath(__file__).resolve().parents[2] / "configs"


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_load(name):
    config = RunConfig.load(CONFIGS / name)
    assert config.command in COMMANDS
