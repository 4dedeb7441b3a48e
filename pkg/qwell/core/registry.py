# qwell/core/registry.py
from typing import Any, Dict


def _entry(module_path: str, class_name: str, *, description: str = "") -> Dict[str, Any]:
    """Build a registry entry with metadata."""
    return {
        "module_path": module_path,
        "class_name": class_name,
        "description": description,
    }


class CommandRegistry:
    """
    Defines WHERE the code lives for each command and its metadata.
    Format: "key": {"module_path", "class_name", "description"}
    Keys use underscores; the CLI spells them with dashes.
    """
    DIRECTORY = {
        "check_hypotheses": _entry(
            "qwell.modules.cli.commands.hypotheses", "CheckHypothesesCommand",
            description="Coupling decay, A, B and diagonal combinations for a dipole moment",
        ),
        "simulate": _entry(
            "qwell.modules.cli.commands.simulate", "SimulateCommand",
            description="Propagate the eigenstates under a control and report the invariants",
        ),
        "obstruction": _entry(
            "qwell.modules.cli.commands.obstruction", "ObstructionCommand",
            description="Coercivity scan, small-time reachability trials and expansion orders",
        ),
        "build_reference": _entry(
            "qwell.modules.cli.commands.reference", "BuildReferenceCommand",
            description="Build a return-method reference trajectory and save it as a bundle",
        ),
        "control": _entry(
            "qwell.modules.cli.commands.control", "ControlCommand",
            description="Solve for controls reaching targets near a reference endpoint",
        ),
    }

    @staticmethod
    def cli_name(key: str) -> str:
        return key.replace("_", "-")

    @staticmethod
    def get_menu() -> Dict[str, str]:
        return {CommandRegistry.cli_name(key): entry["description"] for key, entry in CommandRegistry.DIRECTORY.items()}
