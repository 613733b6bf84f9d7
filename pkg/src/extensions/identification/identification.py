import logging
from pathlib import Path

import custom_context as cc
import extensions as exts
import linmodel
import pipeline
import workbench as wb

logger = logging.getLogger(__name__)

THIS_FOLDER = Path(__file__).parent


_commands_attributes = exts.read_commands_attributes(THIS_FOLDER/'commands_attr.json')  # Global cache for config data
get_command_attributes = exts.get_command_attributes_builder(_commands_attributes)


class Identification(wb.CommandGroup):
    """Offline model derivation"""

    def __init__(self, workbench: wb.Workbench) -> None:
        self.workbench = workbench

    def group_load(self) -> None:
        # The attributes are only needed while the commands are registered
        globals().pop('_commands_attributes', None)

    @wb.command(**get_command_attributes('identify'))
    async def identify(self, ctx: cc.RunContext) -> None:
        result = await ctx.run(pipeline.identify, ctx.config)
        for name, report in (('radiation', result.radiation_report), ('wave-force', result.wave_report)):
            errors = ', '.join(f'{error:.2%}' for error in report.hinf_band)
            flags = f' [{", ".join(report.flags)}]' if report.flags else ''
            ctx.echo(f'{name}: order {report.order}, band errors {errors}, H2 {report.h2_band:.2%}{flags}')
        assembled = result.assembled
        ctx.echo(f'assembled model: {assembled.dt_model.n} states, '
                 f'spectral radius {assembled.dt_model.spectral_radius():.6f}, '
                 f'surge period {linmodel.surge_mode_period(assembled):.1f} s')
        ctx.echo(f'models written to {pipeline.model_directory(ctx.config)}')
