import csv
import json

import pytest
import yaml

from densityflow.cli import main
from densityflow.config import load_config, parse_config
from densityflow.errors import ConfigError


def write(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else yaml.safe_dump(data))
    return path


def run(tmp_path, command, data, seed=0, out="out"):
    code = main([command, "--config", str(write(tmp_path, data)), "--out", str(tmp_path / out), "--seed", str(seed)])
    return code, tmp_path / out


def test_minimal_config_applies_defaults():
    cfg = load_config({"grid": {"points": 32}})
    eff = cfg.effective()
    assert eff["physics"]["hbar"] == 0.5 and eff["physics"]["potential"] == "cos(x)"
    assert eff["time"]["dt"] is None and eff["time"]["t_final"] == 1.0
    assert eff["checks"]["gaussian_samples"] == 2048 and eff["checks"]["gaussian_half_width"] == 12.0


def test_missing_dt_is_named():
    with pytest.raises(ConfigError) as info:
        load_config({"grid": {"points": 32}}, "evolve")
    assert info.value.field == "time.dt"


@pytest.mark.parametrize(
    "data, field",
    [
        ({"grid": {"points": 32}, "time": {"dt": -0.1}}, "time.dt"),
        ({"grid": {"points": 32}, "colour": "red"}, "colour"),
        ({"grid": {"points": 32, "spacing": 1}}, "grid.spacing"),
        ({"physics": {"hbar": 1}}, "grid"),
        ({"grid": {"points": 32}, "time": {"dt": 0.1}, "physics": {"potential": "cos(z)"}}, "physics.potential"),
    ],
)
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError) as info:
        load_config(data, "evolve")
    assert info.value.field == field


def test_malformed_yaml_reports_position(tmp_path):
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        parse_config(write(tmp_path, "grid:\n  points: [32\n"))


def test_negative_dt_exits_with_config_status(tmp_path, capsys):
    code, out = run(tmp_path, "evolve", {"grid": {"points": 32}, "time": {"dt": -1e-3}})
    assert code == 2
    assert "time.dt" in capsys.readouterr().err
    assert not (out / "results.json").exists()


def test_effective_config_round_trip(tmp_path):
    cfg = parse_config(write(tmp_path, {"grid": {"points": 64}, "time": {"dt": 0.01}}), "evolve")
    again = load_config(json.loads(json.dumps(cfg.effective())), "evolve")
    assert again == cfg


def test_gaussian_check_passes(tmp_path):
    code, out = run(tmp_path, "gaussian-check", {"grid": {"points": 16}})
    assert code == 0
    results = json.loads((out / "results.json").read_text())
    assert results["all_passed"] and results["suite"] == "gaussian-check"
    identity = next(c for c in results["checks"] if c["name"] == "expectation_identity")
    assert identity["measured"] < 1e-8 and identity["tolerance"] == 1e-8
    assert set(json.loads((out / "metadata.json").read_text())) >= {"timestamp", "runtime_seconds"}


def test_results_are_deterministic_for_a_seed(tmp_path):
    data = {"grid": {"points": 32}, "checks": {"bracket_trials": 3, "trials": 3}}
    _, a = run(tmp_path, "bracket-check", data, seed=7, out="a")
    _, b = run(tmp_path, "bracket-check", data, seed=7, out="b")
    _, c = run(tmp_path, "bracket-check", data, seed=8, out="c")
    assert (a / "results.json").read_bytes() == (b / "results.json").read_bytes()
    assert (a / "results.json").read_bytes() != (c / "results.json").read_bytes()


def test_stationary_evolve_writes_constant_energy(tmp_path):
    data = {
        "grid": {"points": 64},
        "physics": {"hbar": 0.5, "potential": "0.7", "stationary": True},
        "initial": {"rho": "1 + 0.3*cos(x)", "phi": "0"},
        "time": {"dt": 1e-3, "t_final": 0.2, "record_every": 50},
    }
    code, out = run(tmp_path, "evolve", data)
    assert code == 0
    with open(out / "energy.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "value"]
    energies = [float(v) for _, v in rows[1:]]
    assert len(energies) == 5
    assert max(energies) - min(energies) < 1e-9 * abs(energies[0])


def test_unwritable_output_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = main(["gaussian-check", "--config", str(write(tmp_path, {"grid": {"points": 16}})), "--out", str(blocker / "x")])
    assert code == 2
