import argparse
import asyncio
import importlib
import inspect
import logging
import signal
import sys
import typing as t
from dataclasses import dataclass
from pathlib import Path

import custom_context as cc
import custom_errors as ce
import extensions as exts

logger = logging.getLogger(__name__)

INTERRUPTED_EXIT_CODE = 130
_ARGUMENT_TYPES = {int: int, float: float, str: str, Path: Path}


def _argument_type(annotation: t.Any) -> t.Callable[[str], t.Any]:
    """argparse converter for an annotation, looking through `X | None`"""
    candidates = [arg for arg in t.get_args(annotation) if arg is not type(None)] or [annotation]
    return _ARGUMENT_TYPES.get(candidates[0], str)


@dataclass(frozen=True)
class Parameter:
    """Command-line argument declared as the default value of a command callback parameter"""
    description: str = ''
    flags: tuple[str, ...] = ()
    default: t.Any = None
    choices: tuple | None = None
    required: bool = False
    action: str | None = None


def parameter(
    *,
    description: str = '',
    flags: t.Sequence[str] = (),
    default: t.Any = None,
    choices: t.Sequence | None = None,
    required: bool = False,
    action: str | None = None,
) -> t.Any:
    return Parameter(description, tuple(flags), default, None if choices is None else tuple(choices), required, action)


def command(*, name: str | None = None, help: str = '', brief: str = '', aliases: t.Sequence[str] = ()) -> t.Callable:
    """Mark a coroutine method of a CommandGroup as a workbench command"""
    def decorator(func: t.Callable) -> t.Callable:
        if not asyncio.iscoroutinefunction(func):
            raise TypeError(f'Command callback "{func.__name__}" must be a coroutine')
        func.__command_attrs__ = {
            'name': name or func.__name__.replace('_', '-'), 'help': help, 'brief': brief, 'aliases': tuple(aliases),
        }
        return func
    return decorator


def listener(name: str | None = None) -> t.Callable:
    """Mark a coroutine method of a CommandGroup as an event listener (e.g. on_command_error)"""
    def decorator(func: t.Callable) -> t.Callable:
        func.__listener_name__ = name or func.__name__
        return func
    return decorator


class CommandGroup:
    """Base class of the command groups registered by extensions"""

    def group_load(self) -> None:
        """Called once the group's commands are registered"""


@dataclass(frozen=True)
class Command:
    name: str
    callback: t.Callable[..., t.Awaitable[t.Any]]
    group: CommandGroup
    parameters: tuple[str, ...]
    extension: str


class Workbench:
    def __init__(self, *, initial_extensions: list[str], prog: str = 'workbench') -> None:
        self.initial_extensions = initial_extensions
        self.parser = argparse.ArgumentParser(
            prog=prog, description='Mooring fault-detection workbench for a floating wind turbine',
        )
        self._add_global_arguments(self.parser, None)
        self._global_parent = argparse.ArgumentParser(add_help=False)
        self._add_global_arguments(self._global_parent, argparse.SUPPRESS)
        self._subparsers = self.parser.add_subparsers(dest='command_name', metavar='command', required=True)
        self.commands: dict[str, Command] = {}
        self.extensions: dict[str, t.Any] = {}
        self.listeners: dict[str, list[t.Callable]] = {}
        self._task: asyncio.Task | None = None
        self._closed = False

    @staticmethod
    def _add_global_arguments(parser: argparse.ArgumentParser, default: t.Any) -> None:
        parser.add_argument('--config', metavar='PATH', default=default, help='configuration file layered on the defaults')
        parser.add_argument('--out', metavar='DIR', default=default, help='output directory')
        parser.add_argument('--seed', metavar='N', type=int, default=default, help='base random seed')
        parser.add_argument('--parallel', action='store_true', default=default if default is not None else False,
                            help='run independent scenarios in worker processes')

    async def __aenter__(self) -> 'Workbench':
        await self.setup_hook()
        self.add_exit_handler()
        return self

    async def __aexit__(self, *exc_info) -> None:
        if not self._closed:
            await self.close()

    def add_exit_handler(self) -> None:
        """Register a signal handler for termination signals (usually ctrl+c)"""
        signal.signal(signal.SIGINT, lambda *args, **kwargs: asyncio.create_task(self.close()))

    async def close(self) -> None:
        """Exit handler for termination signals"""
        logger.warning('Closing workbench')
        self._closed = True
        if self._task is not None and not self._task.done():
            self._task.cancel()

    async def setup_hook(self) -> None:
        """Setup the workbench"""
        await exts.manage_extensions(self, self.initial_extensions, 'load')

    # Extensions

    async def load_extension(self, name: str) -> None:
        if name in self.extensions:
            raise ce.ExtensionError(f'Extension "{name}" is already loaded')
        try:
            module = importlib.import_module(name)
        except ImportError as error:
            raise ce.ExtensionError(f'Extension "{name}" could not be imported: {error}') from error
        setup = getattr(module, 'setup', None)
        if setup is None:
            raise ce.ExtensionError(f'Extension "{name}" has no setup function')
        await setup(self)
        self.extensions[name] = module

    async def unload_extension(self, name: str) -> None:
        if name not in self.extensions:
            raise ce.ExtensionError(f'Extension "{name}" is not loaded')
        for command_name in [key for key, value in self.commands.items() if value.extension == name]:
            del self.commands[command_name]
            self._subparsers._name_parser_map.pop(command_name, None)
        for event, callbacks in self.listeners.items():
            self.listeners[event] = [callback for callback in callbacks
                                     if getattr(callback, '__module__', '').rpartition('.')[0] != name]
        del self.extensions[name]
        for module_name in [key for key in sys.modules if key == name or key.startswith(f'{name}.')]:
            del sys.modules[module_name]

    async def reload_extension(self, name: str) -> None:
        await self.unload_extension(name)
        await self.load_extension(name)

    # Commands

    async def add_group(self, group: CommandGroup) -> None:
        extension = type(group).__module__.rpartition('.')[0]
        for _, method in inspect.getmembers(group, inspect.ismethod):
            if attrs := getattr(method, '__command_attrs__', None):
                self._add_command(group, method, attrs, extension)
            if event := getattr(method, '__listener_name__', None):
                self.listeners.setdefault(event, []).append(method)
        group.group_load()

    def _add_command(self, group: CommandGroup, method: t.Callable, attrs: dict, extension: str) -> None:
        name = attrs['name']
        if name in self.commands:
            raise ce.ExtensionError(f'Command "{name}" is registered twice')
        subparser = self._subparsers.add_parser(
            name, aliases=list(attrs['aliases']), help=attrs['brief'] or attrs['help'],
            description=attrs['help'], parents=[self._global_parent],
        )
        subparser.set_defaults(command_name=name)
        names = []
        for parameter_name, spec in list(inspect.signature(method).parameters.items())[1:]:
            if not isinstance(spec.default, Parameter):
                raise ce.ExtensionError(f'Parameter "{parameter_name}" of command "{name}" needs a parameter() default')
            declared = spec.default
            flags = declared.flags or (f'--{parameter_name.replace("_", "-")}',)
            options: dict[str, t.Any] = {'help': declared.description, 'default': declared.default}
            if flags[0].startswith('-'):
                options['dest'] = parameter_name
                options['required'] = declared.required
            if declared.action:
                options['action'] = declared.action
            else:
                options['type'] = _argument_type(spec.annotation)
                if declared.choices is not None:
                    options['choices'] = declared.choices
            subparser.add_argument(*flags, **options)
            names.append(parameter_name)
        self.commands[name] = Command(name, method, group, tuple(names), extension)

    def get_context(self, args: argparse.Namespace, command: Command, *, cls=cc.RunContext) -> cc.RunContext:
        return cls.from_arguments(self, args, command)

    async def on_command(self, ctx: cc.RunContext) -> None:
        """Called when a command is about to be invoked"""
        # Logs all command calls
        logger.debug(f'Command "{ctx.command.name}" called with arguments {vars(ctx.args)}')

    async def invoke(self, ctx: cc.RunContext) -> t.Any:
        arguments = {name: getattr(ctx.args, name) for name in ctx.command.parameters}
        return await ctx.command.callback(ctx, **arguments)

    async def dispatch_error(self, ctx: cc.RunContext | None, error: BaseException) -> int:
        """Let the error listeners log the error, the first non-None answer is the exit code"""
        for callback in self.listeners.get('on_command_error', []):
            exit_code = await callback(ctx, error)
            if exit_code is not None:
                return exit_code
        logger.error(f'{error.__class__.__name__}: {error}', exc_info=error)
        return getattr(error, 'exit_code', 1)

    async def start(self, argv: t.Sequence[str] | None = None) -> int:
        """Parse the command line, run the command and return the process exit code"""
        args = self.parser.parse_args(argv)
        self._task = asyncio.current_task()
        ctx = None
        try:
            ctx = self.get_context(args, self.commands[args.command_name])
            ctx.persist_settings()
            await self.on_command(ctx)
            await self.invoke(ctx)
        except asyncio.CancelledError:
            logger.warning('Command interrupted')
            return INTERRUPTED_EXIT_CODE
        except Exception as error:
            return await self.dispatch_error(ctx, error)
        return 0
