# qwell/core/kernel.py
import importlib
import logging
from typing import Dict, Optional

from pydantic import ValidationError

from qwell.core.command_base import BaseCommand
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.registry import CommandRegistry
from qwell.core.schemas import TASK_SCHEMA_MAP

_MODULE_PREFIX = "qwell.modules."


class Kernel:
    def __init__(self):
        self.logger = logging.getLogger("Qwell.Kernel")
        self.commands: Dict[str, BaseCommand] = {}
        self.logger.debug("Booting qwell command kernel...")
        self._boot_commands()

    def _boot_commands(self):
        """Dynamically loads all commands defined in the Registry."""
        for key, entry in CommandRegistry.DIRECTORY.items():
            module_path = entry.get("module_path")
            class_name = entry.get("class_name")
            if not module_path or not class_name:
                self.logger.error(f"Invalid registry entry for {key}: missing module_path or class_name")
                continue
            self.register_command(key, module_path, class_name)

    def register_command(self, key: str, module_path: str, class_name: str):
        """
        Register a command with validation and error handling.

        Validates:
        - Module path is whitelisted (qwell.modules.*)
        - Class exists and inherits from BaseCommand
        - Command can be instantiated
        """
        try:
            if not module_path.startswith(_MODULE_PREFIX):
                raise ValueError(f"Module path must start with '{_MODULE_PREFIX}': {module_path}")
            if not key.replace("_", "").isalnum():
                raise ValueError(f"Invalid command key format (alphanumeric and _ only): {key}")

            try:
                module = importlib.import_module(module_path)
            except ImportError as e:
                self.logger.error(f"❌ Import error for {key} at {module_path}: {e}")
                return

            command_class = getattr(module, class_name, None)
            if command_class is None:
                self.logger.error(f"❌ Class {class_name} NOT FOUND in {module_path}")
                return
            if not (isinstance(command_class, type) and issubclass(command_class, BaseCommand)):
                self.logger.error(f"❌ Class {class_name} must inherit from BaseCommand")
                return

            self.commands[key] = command_class()
            self.logger.debug(f"✅ Registered Command: {key} ({module_path}.{class_name})")
        except ValueError as e:
            self.logger.error(f"❌ Validation error for command {key}: {e}")
        except Exception as e:
            self.logger.error(f"❌ Unexpected error loading command {key}: {e}", exc_info=True)

    def _resolve_command(self, task: str) -> Optional[str]:
        """
        Maps a task name to a registered command key.
        Priority 1: Exact Match (dashes and underscores are interchangeable)
        Priority 2: Prefix Match, longest key first (e.g. 'obstruction_scan' -> 'obstruction')
        """
        if not task or not isinstance(task, str) or len(task) > 100:
            self.logger.warning(f"Invalid task name: {task!r}")
            return None
        task = task.replace("-", "_")
        if task in self.commands:
            return task
        for key in sorted(self.commands.keys(), key=len, reverse=True):
            if task.startswith(key + "_"):
                self.logger.debug(f"Prefix match found: {key} for task {task}")
                return key
        return None

    async def dispatch(self, packet: CommandInput) -> CommandOutput:
        """
        Resolve the command, validate the run config against its schema (defaults filled in),
        hand the resolved config to the command and run it.
        """
        key = self._resolve_command(packet.task)
        if not key:
            self.logger.error(f"⛔ No command found for task: {packet.task}")
            return CommandOutput(
                status="error",
                message=f"Unknown command '{packet.task}'. Available: {', '.join(sorted(CommandRegistry.get_menu()))}",
                exit_code=2,
            )

        schema_class = TASK_SCHEMA_MAP.get(key)
        params = packet.params or {}
        if schema_class is not None:
            try:
                params = schema_class.model_validate(params).model_dump(mode="json")
            except ValidationError as e:
                self.logger.warning(f"Params validation failed for task {packet.task}: {e.error_count()} error(s)")
                return CommandOutput(
                    status="error",
                    message=f"Invalid config for {key}: {e}",
                    exit_code=2,
                    data={
                        "error": "ConfigError",
                        "details": [{"loc": [str(p) for p in err["loc"]], "msg": err["msg"]} for err in e.errors()],
                    },
                )

        command = self.commands[key]
        command.config = params
        self.logger.info(f"📡 Dispatching Command: {key} | Request: {packet.request_id}")
        return await command.run(packet.model_copy(update={"task": key, "params": params}))


kernel = Kernel()
