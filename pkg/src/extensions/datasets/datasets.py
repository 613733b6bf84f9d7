import logging
from pathlib import Path

import custom_context as cc
import extensions as exts
import hydro
import pipeline
import workbench as wb

logger = logging.getLogger(__name__)

THIS_FOLDER = Path(__file__).parent


_commands_attributes = exts.read_commands_attributes(THIS_FOLDER/'commands_attr.json')  # Global cache for config data
get_command_attributes = exts.get_command_attributes_builder(_commands_attributes)
get_command_parameters = exts.get_command_parameters_builder(_commands_attributes)


class Datasets(wb.CommandGroup):
    """Input data products: wave records and the hydrodynamic dataset"""

    def __init__(self, workbench: wb.Workbench) -> None:
        self.workbench = workbench

    def group_load(self) -> None:
        globals().pop('_commands_attributes', None)

    @wb.command(**get_command_attributes('wave-export'))
    async def wave_export(
        self,
        ctx: cc.RunContext,
        path: Path | None = wb.parameter(**get_command_parameters('wave-export', 'path')),
    ) -> None:
        written = await ctx.run(pipeline.export_wave, ctx.config, path)
        ctx.echo(f'wave elevation written to {written}')

    @wb.command(**get_command_attributes('frd-synth'))
    async def frd_synth(self, ctx: cc.RunContext) -> None:
        frd = await ctx.run(pipeline.synthesize_dataset, ctx.config)
        directory = hydro.save_hydro_dataset(frd, ctx.config.output_dir / 'hydro')
        ctx.echo(f'hydrodynamic dataset with {frd.omega.size} frequencies written to {directory}')
