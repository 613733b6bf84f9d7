import argparse
import asyncio
import functools
import logging
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

import dynaconf

import custom_errors as ce
from settings import CustomDynaconf, settings as default_settings

if t.TYPE_CHECKING:
    import workbench as wb

logger = logging.getLogger(__name__)


def _plain(value: t.Any) -> t.Any:
    """Settings boxes to plain dicts and lists so the config pickles into worker processes"""
    if isinstance(value, t.Mapping):
        return {str(key).lower(): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated, immutable view of the settings consumed by the pipeline"""
    sections: dict[str, dict] = field(repr=False)
    output_dir: Path = Path('output')
    seed: int = 0
    parallel: bool = False
    hydro_dataset: Path | None = None

    def section(self, name: str) -> dict:
        try:
            return self.sections[name]
        except KeyError:
            raise ce.ConfigurationError(f'Configuration has no [{name}] section') from None

    def with_section(self, name: str, **values: t.Any) -> 'RunConfig':
        """Copy with some keys of one section replaced"""
        sections = dict(self.sections)
        sections[name] = {**self.section(name), **values}
        return RunConfig(sections, self.output_dir, self.seed, self.parallel, self.hydro_dataset)

    @classmethod
    def from_settings(
        cls,
        settings: CustomDynaconf,
        output_dir: str | Path | None = None,
        seed: int | None = None,
        parallel: bool = False,
    ) -> 'RunConfig':
        try:
            settings.validators.validate()
        except dynaconf.ValidationError as error:
            raise ce.ConfigurationError(f'Invalid configuration: {error}') from error
        sections = {name: body for name, body in _plain(settings.to_dict()).items() if isinstance(body, dict)}
        dataset = str(sections.get('identification', {}).get('dataset', '') or '')
        return cls(
            sections=sections,
            output_dir=Path(output_dir if output_dir is not None else sections['output']['directory']),
            seed=int(seed if seed is not None else sections['seeds']['base']),
            parallel=parallel,
            hydro_dataset=Path(dataset) if dataset else None,
        )


@dataclass
class RunContext:
    """Everything a command callback needs: the workbench, the parsed arguments and the configuration"""
    workbench: 'wb.Workbench'
    args: argparse.Namespace
    command: 'wb.Command'
    settings: CustomDynaconf
    config: RunConfig

    @classmethod
    def from_arguments(
        cls,
        workbench: 'wb.Workbench',
        args: argparse.Namespace,
        command: 'wb.Command',
        settings: CustomDynaconf | None = None,
    ) -> 'RunContext':
        settings = settings if settings is not None else default_settings
        if args.config is not None:
            path = Path(args.config)
            if not path.is_file():
                raise ce.ConfigurationError(f'Configuration file "{path}" does not exist')
            try:
                settings.load_user_file(path)
            except dynaconf.ValidationError as error:
                raise ce.ConfigurationError(f'Invalid configuration in "{path}": {error}') from error
            logger.info(f'Loaded configuration overrides from "{path}"')
        config = RunConfig.from_settings(settings, args.out, args.seed, args.parallel)
        return cls(workbench=workbench, args=args, command=command, settings=settings, config=config)

    def persist_settings(self) -> Path:
        """Write the effective settings next to the outputs of the command"""
        self.config.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.output_dir / 'effective_settings.json'
        self.settings.persist(path)
        return path

    async def run(self, func: t.Callable, *args, **kwargs) -> t.Any:
        """Run a blocking pipeline step off the event loop"""
        return await asyncio.to_thread(functools.partial(func, *args, **kwargs))

    def echo(self, text: str) -> None:
        print(text, flush=True)
