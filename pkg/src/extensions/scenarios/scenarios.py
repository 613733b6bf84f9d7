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


def _format_delay(delay: float | None) -> str:
    return '-' if delay is None else f'{delay:.1f}'


class Scenarios(wb.CommandGroup):
    """Fault scenario runs"""

    def __init__(self, workbench: wb.Workbench) -> None:
        self.workbench = workbench

    def group_load(self) -> None:
        globals().pop('_commands_attributes', None)

    @wb.command(**get_command_attributes('run'))
    async def run(
        self,
        ctx: cc.RunContext,
        case: int = wb.parameter(**get_command_parameters('run', 'case')),
        parameter: float | None = wb.parameter(**get_command_parameters('run', 'parameter')),
    ) -> None:
        outcome = await ctx.run(pipeline.run_case, ctx.config, case, parameter)
        ctx.echo(f'case {outcome.case}: detected {str(outcome.detected).lower()}, '
                 f'delay {_format_delay(outcome.detection_delay)} s, far {outcome.far:.4f}, '
                 f'threshold {outcome.threshold:.4f}')
        for name, path in outcome.paths.items():
            ctx.echo(f'  {name}: {path}')

    @wb.command(**get_command_attributes('batch'))
    async def batch(self, ctx: cc.RunContext) -> None:
        outcomes = await pipeline.run_batch_async(ctx.config)
        ctx.echo(f'{"case":>4}  {"detected":>8}  {"delay_s":>7}  {"far":>7}')
        for outcome in outcomes:
            if outcome.error:
                ctx.echo(f'{outcome.case:>4}  failed: {outcome.error}')
                continue
            ctx.echo(f'{outcome.case:>4}  {str(outcome.detected).lower():>8}  '
                     f'{_format_delay(outcome.detection_delay):>7}  {outcome.far:>7.4f}')
        ctx.echo(f'summary written to {ctx.config.output_dir / "summary.csv"}')
        pipeline.check_gates(ctx.config, outcomes)
