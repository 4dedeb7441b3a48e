# qwell/modules/cli/commands/hypotheses.py
from qwell.core.command_base import BaseCommand
from qwell.core.models import CommandInput, CommandOutput
from qwell.modules.cli.common import coupling_from_params, output_dir, success, write_report
from qwell.modules.spectral_core.hypotheses import SATISFIED, hypotheses_report


class CheckHypothesesCommand(BaseCommand):
    """Numerical check of the coupling hypotheses on the configured truncation window."""

    def __init__(self):
        super().__init__(name="CheckHypotheses")

    async def _execute(self, input_data: CommandInput) -> CommandOutput:
        params = input_data.params
        data = coupling_from_params(params)
        report = hypotheses_report(data, params["threshold"])
        path = write_report(output_dir(input_data, params), "hypotheses.json", "check-hypotheses", params, report)

        failed = sorted(name for name, verdict in report.verdicts.items() if verdict != SATISFIED)
        if failed:
            self.logger.warning(f"⚠️ Not satisfied: {', '.join(failed)}")
            message = f"Hypotheses not satisfied: {', '.join(failed)}"
        else:
            message = "All hypotheses satisfied on the finite window"
        return success(message, report.model_dump(), [path])
