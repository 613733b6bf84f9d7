import logging

import custom_context as cc
import custom_errors as ce
import workbench as wb

logger = logging.getLogger(__name__)


class ErrorHandler(wb.CommandGroup):
    """Global error handler class: logs the error and answers the process exit code"""

    handle_error_method_name = '_handle_{error_name}'

    def __init__(self, workbench: wb.Workbench) -> None:
        self.workbench = workbench
        self.ignored_errors = ()

    @wb.listener()
    async def on_command_error(self, ctx: cc.RunContext | None, error: BaseException) -> int | None:
        # Ignore errors if needed
        if isinstance(error, self.ignored_errors):
            return 0

        # The most specific handler along the class hierarchy wins
        for error_class in type(error).__mro__:
            method = getattr(self, self.handle_error_method_name.format(error_name=error_class.__name__), None)
            if method is not None:
                return await method(ctx, error)
        return await self._unhandled_error(ctx, error)

    async def _unhandled_error(self, ctx: cc.RunContext | None, error: BaseException) -> int:
        error_message = {
            'Error Class Name': error.__class__.__name__,
            'Error Message': str(error),
            'Command': ctx.command.name if ctx else 'None',
            'Output Directory': str(ctx.config.output_dir) if ctx else 'None',
        }
        # Using try except to log error with traceback (logger.exception)
        try:
            raise ce.UnhandledError() from error
        except ce.UnhandledError:
            logger.exception('Unhandled Error: ' + ', '.join(f'{key}: {value}' for key, value in error_message.items()))
        return ce.UnhandledError.exit_code

    def _stage_suffix(self, error: BaseException) -> str:
        notes = getattr(error, '__notes__', [])
        return f' ({"; ".join(notes)})' if notes else ''

    async def _handle_ConfigurationError(self, ctx: cc.RunContext | None, error: ce.ConfigurationError) -> int:
        logger.error(f'Configuration error: {error}{self._stage_suffix(error)}')
        return error.exit_code

    async def _handle_NumericalError(self, ctx: cc.RunContext | None, error: ce.NumericalError) -> int:
        logger.error(f'Numerical failure: {error}{self._stage_suffix(error)}')
        logger.debug('Numerical failure traceback', exc_info=error)
        return error.exit_code

    async def _handle_AcceptanceGateError(self, ctx: cc.RunContext | None, error: ce.AcceptanceGateError) -> int:
        logger.error(str(error))
        return error.exit_code
