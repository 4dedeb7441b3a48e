# qwell/tests/test_kernel.py
"""
Kernel dispatch: command resolution, run-config validation and error conversion.
"""
from unittest.mock import AsyncMock, patch

import pytest

from qwell.core.config import RunConfigLoader
from qwell.core.exceptions import ConfigError, StageError, TrustRegionError
from qwell.core.kernel import kernel
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.registry import CommandRegistry
from qwell.core.workers import map_sync


def test_every_registered_command_boots():
    """Each registry entry imports and instantiates."""
    assert set(kernel.commands) == set(CommandRegistry.DIRECTORY)


def test_resolve_accepts_dashes_and_prefixes():
    """CLI spellings map to registry keys; longer tasks fall back to a prefix."""
    assert kernel._resolve_command("check-hypotheses") == "check_hypotheses"
    assert kernel._resolve_command("build_reference") == "build_reference"
    assert kernel._resolve_command("obstruction_scan") == "obstruction"
    assert kernel._resolve_command("teleport") is None
    assert kernel._resolve_command("") is None


def test_registry_entries_hold_location_and_description():
    """Entries name where the command lives and what it does, nothing else."""
    for entry in CommandRegistry.DIRECTORY.values():
        assert set(entry) == {"module_path", "class_name", "description"}
        assert entry["description"]


def test_menu_uses_cli_names():
    """The menu lists dashed names with their descriptions."""
    menu = CommandRegistry.get_menu()
    assert "check-hypotheses" in menu
    assert "build-reference" in menu
    assert all("_" not in name for name in menu)


@pytest.mark.asyncio
async def test_unknown_command_exits_2():
    """Unknown tasks never reach a command."""
    result = await kernel.dispatch(CommandInput(task="teleport"))
    assert result.status == "error"
    assert result.exit_code == 2
    assert "check-hypotheses" in result.message


@pytest.mark.asyncio
async def test_invalid_config_is_reported_as_config_error():
    """Schema violations come back with exit code 2 and the failing fields."""
    result = await kernel.dispatch(CommandInput(task="simulate", params={"N": 7, "bogus": 1}))
    assert result.exit_code == 2
    assert result.data["error"] == "ConfigError"
    locs = [tuple(d["loc"]) for d in result.data["details"]]
    assert ("N",) in locs
    assert ("bogus",) in locs


@pytest.mark.asyncio
async def test_dispatch_fills_defaults_before_running():
    """The command receives the validated config with defaults."""
    command = kernel.commands["simulate"]
    fake = AsyncMock(return_value=CommandOutput(status="success", message="ok"))
    with patch.object(command, "_execute", fake):
        result = await kernel.dispatch(CommandInput(task="simulate", params={"T": 0.5}))
    assert result.status == "success"
    packet = fake.call_args.args[0]
    assert packet.task == "simulate"
    assert packet.params["T"] == 0.5
    assert packet.params["control"] == {"type": "zero"}
    assert packet.params["dipole"] == {"type": "poly", "coeffs": [0.0, 0.0, 0.0, 1.0]}


@pytest.mark.asyncio
async def test_command_errors_keep_their_exit_code():
    """A stage failure reports the stage and the exit code of its cause."""
    command = kernel.commands["build_reference"]
    failure = StageError("stage1", TrustRegionError("eta too large"))
    with patch.object(command, "_execute", AsyncMock(side_effect=failure)):
        result = await kernel.dispatch(CommandInput(task="build-reference"))
    assert result.status == "error"
    assert result.exit_code == 3
    assert result.data["error"] == "StageError"
    assert result.data["stage"] == "stage1"


@pytest.mark.asyncio
async def test_unexpected_errors_exit_4():
    """Anything that is not a qwell error is reported as a numerical failure."""
    command = kernel.commands["check_hypotheses"]
    with patch.object(command, "_execute", AsyncMock(side_effect=RuntimeError("boom"))):
        result = await kernel.dispatch(CommandInput(task="check-hypotheses"))
    assert result.exit_code == 4
    assert "boom" in result.message


def test_run_config_merge_order(tmp_path):
    """defaults < file < overrides, nested mappings merged, None overrides ignored."""
    path = tmp_path / "run.yaml"
    path.write_text("K_max: 12\ndipole:\n  type: poly\n  coeffs: [0, 1]\nreachability:\n  T: 0.05\n")
    loaded = RunConfigLoader().load(
        str(path),
        defaults={"K_max": 30, "reachability": {"T": 0.1, "trials": 10}},
        overrides={"K_max": 16, "seed": None},
    )
    assert loaded["K_max"] == 16
    assert loaded["reachability"] == {"T": 0.05, "trials": 10}
    assert loaded["dipole"]["coeffs"] == [0, 1]
    assert "seed" not in loaded


def test_run_config_errors(tmp_path):
    """Missing files and non-mapping documents are config errors."""
    with pytest.raises(ConfigError):
        RunConfigLoader().load_file(str(tmp_path / "missing.json"))
    bad = tmp_path / "list.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError) as exc:
        RunConfigLoader().load_file(str(bad))
    assert exc.value.exit_code == 2


def test_map_sync_keeps_submission_order():
    """Threaded fan-out returns results in input order."""
    assert map_sync(lambda x: x * x, list(range(10)), threads=3) == [x * x for x in range(10)]
