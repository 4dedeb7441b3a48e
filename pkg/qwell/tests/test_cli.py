# qwell/tests/test_cli.py
"""
End-to-end CLI runs: exit codes, printed status and the report files each command writes.
"""
import json

import pytest

from qwell import __version__
from qwell.core.reports import read_csv
from qwell.main import build_parser, main


def _write_config(path, config):
    path.write_text(json.dumps(config))
    return str(path)


def _status(capsys):
    return json.loads(capsys.readouterr().out)


def test_parser_knows_every_command():
    """One subcommand per registry entry, all sharing the common flags."""
    args = build_parser().parse_args(["obstruction", "--seed", "3", "--threads", "2"])
    assert args.command == "obstruction"
    assert args.seed == 3
    assert args.threads == 2


def test_version_flag(capsys):
    """--version prints the package version and exits 0."""
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


@pytest.mark.integration
def test_check_hypotheses_writes_report(tmp_path, capsys):
    """The default x^3 dipole satisfies every hypothesis."""
    code = main(["check-hypotheses", "--out", str(tmp_path)])
    status = _status(capsys)
    assert code == 0
    assert status["status"] == "success"
    report = json.loads((tmp_path / "hypotheses.json").read_text())
    assert report["command"] == "check-hypotheses"
    assert report["qwell_version"] == __version__
    assert set(report["result"]["verdicts"].values()) == {"satisfied"}


@pytest.mark.integration
def test_check_hypotheses_reports_failures_without_erroring(tmp_path, capsys):
    """mu = x is checked and reported, not rejected."""
    config = _write_config(tmp_path / "linear.json", {"dipole": {"type": "poly", "coeffs": [0.0, 1.0]}, "K_max": 12})
    code = main(["check-hypotheses", "--config", config, "--out", str(tmp_path / "out")])
    status = _status(capsys)
    assert code == 0
    assert "coupling_decay" in status["message"]


@pytest.mark.integration
def test_simulate_exports_trajectory(tmp_path, capsys):
    """A tone control on a short grid: CSV rows and a unitary propagation."""
    config = _write_config(tmp_path / "sim.json", {
        "N": 2,
        "K_max": 8,
        "T": 0.1,
        "M": 64,
        "control": {"type": "tones", "tones": [{"amplitude": 2.0, "omega": 30.0}]},
        "stride": 16,
        "export_modes": 4,
        "random_controls": 2,
    })
    code = main(["simulate", "--config", config, "--out", str(tmp_path), "--seed", "5"])
    status = _status(capsys)
    assert code == 0
    assert len(status["files"]) == 2
    rows = read_csv(str(tmp_path / "trajectory.csv"))
    assert len(rows) == 5 * 2 * 4
    report = json.loads((tmp_path / "simulation.json").read_text())
    assert report["config"]["seed"] == 5
    assert report["result"]["trajectory"]["gram_drift"] < 1e-10
    assert report["result"]["random_controls"]["trials"] == 2


@pytest.mark.integration
def test_obstruction_short_horizon_scan(tmp_path, capsys):
    """A short-horizon N2 scan is coercive everywhere and writes its table."""
    config = _write_config(tmp_path / "obs.json", {
        "K_max": 8,
        "T_grid": [2e-4, 1e-4],
        "resolution": 16,
        "K_trunc": 32,
    })
    code = main(["obstruction", "--config", config, "--out", str(tmp_path)])
    assert code == 0
    assert "T_star_est=0.0002" in _status(capsys)["message"]
    table = read_csv(str(tmp_path / "coercivity.csv"))
    assert [float(r["T"]) for r in table] == [1e-4, 2e-4]


@pytest.mark.integration
def test_obstruction_not_applicable_for_constant_dipole(tmp_path, capsys):
    """mu = 1 makes the scan degenerate; the run still succeeds."""
    config = _write_config(tmp_path / "obs.json", {
        "dipole": {"type": "poly", "coeffs": [1.0]},
        "K_max": 8,
        "T_grid": [0.1],
        "resolution": 8,
        "K_trunc": 8,
        "reachability": {"T": 0.1, "trials": 2},
    })
    code = main(["obstruction", "--config", config, "--out", str(tmp_path)])
    assert code == 0
    assert "not applicable" in _status(capsys)["message"]
    report = json.loads((tmp_path / "obstruction.json").read_text())
    assert "reachability" not in report["result"]


@pytest.mark.integration
def test_invalid_config_exits_2(tmp_path, capsys):
    """Schema violations are configuration errors."""
    config = _write_config(tmp_path / "bad.json", {"N": 9})
    assert main(["simulate", "--config", config, "--out", str(tmp_path)]) == 2
    assert _status(capsys)["status"] == "error"


@pytest.mark.integration
def test_missing_config_exits_2(tmp_path, capsys):
    """A config path that does not exist is a configuration error."""
    assert main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert "not found" in _status(capsys)["message"]


@pytest.mark.integration
def test_precondition_failure_exits_3(tmp_path, capsys):
    """eta above its budget stops stage 1 with a precondition error."""
    config = _write_config(tmp_path / "ref.json", {"variant": "N3", "K_max": 12, "M": 512, "eta": 0.5})
    assert main(["build-reference", "--config", config, "--out", str(tmp_path)]) == 3
    assert "stage1" in _status(capsys)["message"]


@pytest.mark.slow
@pytest.mark.integration
def test_reference_bundle_then_control(tmp_path, capsys):
    """build-reference writes a bundle that control reloads to reach its own endpoint."""
    bundle = tmp_path / "bundle"
    ref_config = _write_config(tmp_path / "ref.json", {"variant": "N3", "K_max": 12, "M": 2048, "eta": 1e-2})
    assert main(["build-reference", "--config", ref_config, "--out", str(bundle)]) == 0
    capsys.readouterr()
    assert (bundle / "control.csv").exists()
    assert (bundle / "reference.json").exists()

    control_config = _write_config(tmp_path / "control.json", {
        "variant": "N3",
        "K_max": 12,
        "M": 2048,
        "reference_bundle": str(bundle),
        "targets": {"type": "reference"},
    })
    code = main(["control", "--config", control_config, "--out", str(tmp_path / "control")])
    status = _status(capsys)
    assert code == 0, status["message"]
    report = json.loads((tmp_path / "control" / "control.json").read_text())
    assert report["result"]["max_endpoint_error"] <= 1e-6
    assert report["result"]["solutions"][0]["iterations"] == 0
