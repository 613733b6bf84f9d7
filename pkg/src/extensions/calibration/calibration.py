import logging
from pathlib import Path

import custom_context as cc
import extensions as exts
import pipeline
import workbench as wb

logger = logging.getLogger(__name__)

THIS_FOLDER = Path(__file__).parent


_commands_attributes = exts.read_commands_attributes(THIS_FOLDER/'commands_attr.json')  # Global cache for config data
get_command_attributes = exts.get_command_attributes_builder(_commands_attributes)
get_command_parameters = exts.get_command_parameters_builder(_commands_attributes)


class Calibration(wb.CommandGroup):
    """Detector calibration on healthy data"""

    def __init__(self, workbench: wb.Workbench) -> None:
        self.workbench = workbench

    def group_load(self) -> None:
        globals().pop('_commands_attributes', None)

    @wb.command(**get_command_attributes('calibrate'))
    async def calibrate(
        self,
        ctx: cc.RunContext,
        alpha: float | None = wb.parameter(**get_command_parameters('calibrate', 'alpha')),
    ) -> None:
        config = ctx.config if alpha is None else ctx.config.with_section('detector', alpha=alpha)
        det = await ctx.run(pipeline.calibrate, config)
        ctx.echo(f'threshold {det.d_threshold:.4f} (mean_d {det.mean_d:.4f}, std_d {det.std_d:.4f}, alpha {det.alpha:g}, '
                 f'false-alarm bound {det.false_alarm_bound:.4f})')
        ctx.echo(f'calibration written to {pipeline.calibration_path(config)}')
