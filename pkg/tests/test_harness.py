import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from tehomog.errors import ConfigError, ResolutionError
from tehomog.harness import cli
from tehomog.harness.config import DEFAULT_THRESHOLDS, ExperimentConfig, config_from_mapping, load_config
from tehomog.harness.experiments import (
    ExperimentError,
    grid_for,
    run_experiment,
    sweep,
    thread_count,
)
from tehomog.periodic_media import named_profile

ROOT = Path(__file__).resolve().parents[1]
PIECEWISE_TOML = ROOT / "configs" / "piecewise24.toml"
CONSTANT_TOML = ROOT / "configs" / "constant2.toml"


def base(**run):
    return {"profile": {"kind": "named", "name": "piecewise24"}, "run": run}


# ---------------------------------------------------------------- config


def test_load_shipped_config():
    cfg = load_config(PIECEWISE_TOML, "E5")
    assert cfg.profile.n_bar == 3.0
    assert cfg.N_list == (8, 16, 32, 64)
    assert cfg.threshold("E5") == 1.7


def test_section_overrides_run_keys():
    cfg = config_from_mapping({**base(points_per_period=32), "E5": {"points_per_period": 64}}, "E5")
    assert cfg.points_per_period == 64
    assert config_from_mapping({**base(points_per_period=32), "E5": {"points_per_period": 64}},
                               "E1").points_per_period == 32


def test_threshold_override():
    cfg = config_from_mapping({**base(), "thresholds": {"E7": 1.95}}, "E7")
    assert cfg.threshold("E7") == 1.95
    assert cfg.threshold("E8") == DEFAULT_THRESHOLDS["E8"]


@pytest.mark.parametrize("data", [
    {"run": {}},
    {**base(), "extra": {}},
    base(bogus=1),
    base(points_per_period=8),
    base(eps_list=[0.1, 0.2]),
    base(eps_list=[0.1, 0.1, 0.2]),
    base(N_list=[8, 8, 16]),
    base(delta=1.0),
    base(tau_window=[5.0, 1.0]),
    base(base_m=2000),
    base(base_m="many"),
    base(points_per_period=32.5),
    {**base(), "thresholds": {"E9": 1.0}},
    {"profile": {"kind": "piecewise"}},
    {"profile": "no-such-profile"},
])
def test_invalid_config(data):
    with pytest.raises(ConfigError):
        config_from_mapping(data, "E1")


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        config_from_mapping(base(), "E9")


def test_bad_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[profile\n")
    with pytest.raises(ConfigError):
        load_config(path, "E1")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml", "E1")


# ---------------------------------------------------------------- plumbing


@pytest.mark.parametrize("value, expected", [("1", 1), ("3", 3)])
def test_thread_count(monkeypatch, value, expected):
    monkeypatch.setenv("TEHOMOG_THREADS", value)
    assert thread_count() == expected


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_thread_count_rejects(monkeypatch, value):
    monkeypatch.setenv("TEHOMOG_THREADS", value)
    with pytest.raises(ConfigError):
        thread_count()


def test_sweep_preserves_order_and_names_failures(monkeypatch):
    monkeypatch.setenv("TEHOMOG_THREADS", "4")
    assert sweep(lambda x: x * x, list(range(20)), str) == [x * x for x in range(20)]

    def fail(e):
        if e < 0.05:
            raise ResolutionError("too coarse")
        return e

    with pytest.raises(ExperimentError, match=r"eps=0\.03125, tau=10"):
        sweep(fail, [0.125, 0.0625, 0.03125], lambda e: f"eps={e:.6g}, tau=10")


@pytest.mark.parametrize("eps, m", [(1 / 8, 257), (1 / 8.5, 273), (0.3, 108)])
def test_grid_for(eps, m):
    assert grid_for(eps, 32).m == m


# ---------------------------------------------------------------- experiments


@pytest.fixture(scope="module")
def e2_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("e2")
    cfg = ExperimentConfig("E2", named_profile("piecewise24"), output_dir=out)
    return cfg, run_experiment(cfg)


def test_artifacts_written(e2_run):
    cfg, res = e2_run
    d = Path(cfg.output_dir) / "E2"
    assert sorted(p.name for p in d.iterdir()) == ["plot.gp", "rates.json", "report.json", "samples.csv"]
    rows = list(csv.reader((d / "samples.csv").open()))
    assert rows[0] == ["eps", "err", "aux1"]
    assert len(rows) == 5
    rates = json.loads((d / "rates.json").read_text())
    assert rates["pass"] is True
    assert rates["studies"]["E2"]["slope"] == pytest.approx(res.studies["E2"].slope)
    report = json.loads((d / "report.json").read_text())
    assert report["profile"]["kind"] == "piecewise"
    assert "plot 'samples.csv' using 1:2" in (d / "plot.gp").read_text()


def test_rerun_is_bit_identical(e2_run, tmp_path, monkeypatch):
    cfg, _ = e2_run
    monkeypatch.setenv("TEHOMOG_THREADS", "1")
    again = ExperimentConfig("E2", cfg.profile, output_dir=tmp_path)
    run_experiment(again)
    first = (Path(cfg.output_dir) / "E2" / "samples.csv").read_bytes()
    assert (tmp_path / "E2" / "samples.csv").read_bytes() == first
    assert (tmp_path / "E2" / "rates.json").read_bytes() == (Path(cfg.output_dir) / "E2" / "rates.json").read_bytes()


def test_null_case_flag(tmp_path):
    cfg = ExperimentConfig("E5", named_profile("constant2"), tau_window=(1.0, 300.0), N_list=(6, 12, 24),
                           output_dir=tmp_path)
    res = run_experiment(cfg)
    assert res.null_case and res.passed
    assert max(r[1] for r in res.rows) < 1e-9
    assert res.info["tau1"] == 0.0


def test_missing_eigenvalue_is_reported(tmp_path):
    cfg = ExperimentConfig("E7", named_profile("piecewise24"), tau_window=(1.0, 50.0), output_dir=tmp_path)
    with pytest.raises(ExperimentError, match="homogenized eigenvalues"):
        run_experiment(cfg)


# ---------------------------------------------------------------- CLI


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_cli_homog_eig(capsys, golden):
    code, data = run_cli(capsys, "homog-eig", "--nbar", "3", "--window", "1", "200")
    assert code == 0
    assert [r["tau"] for r in data] == pytest.approx(golden["homog_roots"]["3"], abs=1e-9)
    assert all(r["simple"] for r in data)


def test_cli_correction(capsys, golden):
    code, data = run_cli(capsys, "correction", "--profile", "piecewise24", "--delta", "0.5")
    assert code == 0
    assert data["tau1"] == pytest.approx(golden["piecewise24_delta05"]["tau1"], rel=1e-4)
    assert data["denominator_guard"] is True


@pytest.mark.parametrize("argv", [
    ("cell", "--samples", "5"),
    ("direct-eig", "--eps", "0.0625", "--half-width", "1"),
    ("corrector", "--eps", "0.125", "--order", "3"),
    ("cell", "--profile", '{"kind": "trigonometric", "mean": 3.0, "cos": [1.0]}'),
])
def test_cli_subcommands_succeed(capsys, argv):
    code, data = run_cli(capsys, *argv)
    assert code == 0 and data


def test_cli_experiment(capsys, tmp_path):
    code, data = run_cli(capsys, "experiment", "E7", "--config", str(PIECEWISE_TOML), "--output-dir", str(tmp_path))
    assert code == 0 and data["pass"]
    assert (tmp_path / "E7" / "rates.json").exists()


def test_cli_threshold_failure(capsys, tmp_path):
    cfg = tmp_path / "strict.toml"
    cfg.write_text(PIECEWISE_TOML.read_text().replace("E7 = 1.8", "E7 = 5.0"))
    code, data = run_cli(capsys, "experiment", "E7", "--config", str(cfg), "--output-dir", str(tmp_path))
    assert code == 1 and data["pass"] is False


@pytest.mark.parametrize("argv", [
    ("experiment", "E1", "--config", "/nonexistent.toml"),
    ("homog-eig", "--nbar", "1.0"),
    ("cell", "--profile", "nope"),
    ("cell", "--profile", "{bad json"),
    ("frobnicate",),
])
def test_cli_config_errors(capsys, argv):
    assert cli.main(list(argv)) == 2


def test_cli_solver_error(capsys):
    # a window far too narrow to bracket any eigenvalue
    code = cli.main(["direct-eig", "--profile", "piecewise24", "--eps", "0.125", "--guess", "300",
                     "--half-width", "0.001", "--step", "0.001"])
    assert code == 3


def test_cli_suite_subset(capsys, tmp_path):
    code, data = run_cli(capsys, "suite", "--config", str(CONSTANT_TOML), "--output-dir", str(tmp_path),
                         "--only", "E1", "E5")
    assert code == 0
    assert set(data["experiments"]) == {"E1", "E5"}
    assert data["experiments"]["E5"]["null_case"] is True
