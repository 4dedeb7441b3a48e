# qwell/core/command_base.py
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

from qwell.core.exceptions import QwellBaseException
from qwell.core.models import CommandInput, CommandOutput


class BaseCommand(ABC):
    def __init__(self, name: str, config: Optional[Dict[str, Any]] = None):
        self.name = name
        self.config = config or {}
        self.logger = logging.getLogger(f"Qwell.{name}")

    async def run(self, input_data: CommandInput) -> CommandOutput:
        """
        Entry point for every command: logs start/finish and converts raised
        qwell errors into an error CommandOutput with the matching exit code.
        """
        self.logger.info(f"Command Started: {self.name}")
        try:
            result = await self._execute(input_data)
            self.logger.info(f"Command Finished: {self.name} - Status: {result.status}")
            return result
        except QwellBaseException as e:
            self.logger.error(f"❌ Command Failed: {self.name} - {e.message} (exit {e.exit_code})")
            return CommandOutput(
                status="error",
                message=f"{self.name} failed: {e.message}",
                exit_code=e.exit_code,
                data={"error": type(e).__name__, **_error_details(e)},
            )
        except Exception as e:
            self.logger.exception(f"Command Failed: {self.name} - {str(e)}")
            return CommandOutput(
                status="error",
                message=f"{self.name} failed: {str(e)}",
                exit_code=4,
            )

    @abstractmethod
    async def _execute(self, input_data: CommandInput) -> CommandOutput:
        """
        Every command implements this. Called by run(), which provides logging
        and error conversion.
        """
        pass


def _error_details(error: QwellBaseException) -> Dict[str, Any]:
    details: Dict[str, Any] = {}
    for attr in ("condition", "residual_history", "stage"):
        if hasattr(error, attr):
            details[attr] = getattr(error, attr)
    return details
