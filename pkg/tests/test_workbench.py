import asyncio
import json
from pathlib import Path

import pytest

import custom_context as cc
import custom_errors as ce
import workbench as wb
from settings import build_settings

EXTENSIONS = ['calibration', 'datasets', 'error_handler', 'identification', 'scenarios']


def run(coroutine):
    return asyncio.run(coroutine)


async def started(argv: list[str]) -> int:
    async with wb.Workbench(initial_extensions=EXTENSIONS) as workbench:
        return await workbench.start(argv)


async def loaded() -> wb.Workbench:
    workbench = wb.Workbench(initial_extensions=EXTENSIONS)
    await workbench.setup_hook()
    return workbench


@pytest.fixture
def workbench() -> wb.Workbench:
    return run(loaded())


@pytest.fixture
def fresh_settings(monkeypatch):
    """Keep --config overrides out of the settings shared by the other tests"""
    monkeypatch.setattr(cc, 'default_settings', build_settings())


def override(tmp_path: Path, text: str) -> str:
    path = tmp_path / 'override.toml'
    path.write_text(text)
    return str(path)


class TestCommandLine:
    def test_every_command_is_registered(self, workbench):
        assert set(workbench.commands) == {'identify', 'calibrate', 'run', 'batch', 'wave-export', 'frd-synth'}

    def test_typed_arguments(self, workbench):
        args = workbench.parser.parse_args(['run', '--case', '2', '--parameter', '250'])
        assert args.command_name == 'run' and args.case == 2 and args.parameter == 250.0

    def test_global_flags_on_either_side(self, workbench):
        before = workbench.parser.parse_args(['--seed', '5', '--out', 'elsewhere', 'calibrate'])
        after = workbench.parser.parse_args(['calibrate', '--seed', '5', '--out', 'elsewhere'])
        for args in (before, after):
            assert args.seed == 5 and args.out == 'elsewhere' and args.parallel is False

    def test_aliases(self, workbench):
        assert workbench.parser.parse_args(['all']).command_name == 'batch'
        assert workbench.parser.parse_args(['id']).command_name == 'identify'

    def test_required_case(self, workbench):
        with pytest.raises(SystemExit):
            workbench.parser.parse_args(['run'])

    def test_path_argument(self, workbench):
        args = workbench.parser.parse_args(['wave-export', '--path', 'wave.csv'])
        assert args.path == Path('wave.csv')


class TestExtensions:
    def test_loading_twice_is_refused(self, workbench):
        with pytest.raises(ce.ExtensionError):
            run(workbench.load_extension('extensions.datasets'))

    def test_unload_and_reload(self, workbench):
        run(workbench.unload_extension('extensions.datasets'))
        assert 'frd-synth' not in workbench.commands
        run(workbench.load_extension('extensions.datasets'))
        assert 'frd-synth' in workbench.commands

    def test_missing_extension_is_reported(self, workbench):
        outcome = run(wb.exts.manage_extensions(workbench, ['nonexistent'], 'load'))
        assert outcome['success'] == [] and outcome['fail'][0][0] == 'nonexistent'


class TestExitCodes:
    @pytest.mark.parametrize(('error', 'code'), [
        (ce.ConfigurationError('bad'), 2),
        (ce.DomainError('bad'), 2),
        (ce.CatenaryError('no bracket', 0), 3),
        (ce.AcceptanceGateError('gate'), 4),
        (RuntimeError('boom'), 1),
    ])
    def test_error_listener(self, workbench, error, code):
        assert run(workbench.dispatch_error(None, error)) == code

    def test_run_without_calibration(self, tmp_path):
        assert run(started(['--out', str(tmp_path), 'run', '--case', '1'])) == 2

    def test_unknown_configuration_file(self, tmp_path):
        assert run(started(['--config', str(tmp_path / 'absent.toml'), 'frd-synth'])) == 2

    def test_calibrate_without_a_model(self, tmp_path):
        assert run(started(['--out', str(tmp_path), 'calibrate'])) == 2

    @pytest.mark.parametrize('text', [
        '[detector]\ndynaconf_merge = true\nalpha = 0.5\n',
        '[detector]\ndynaconf_merge = true\nalpha = 1.0\n',
        '[simulation]\ndynaconf_merge = true\ndt_out = 2.0\n',
        '[simulation]\ndynaconf_merge = true\ndt_out = 0.0\n',
        '[simulation]\ndynaconf_merge = true\ndt_inner = 1.5\n',
    ])
    def test_out_of_range_override(self, tmp_path, fresh_settings, text):
        argv = ['--config', override(tmp_path, text), '--out', str(tmp_path / 'out'), 'frd-synth']
        assert run(started(argv)) == 2
        assert not (tmp_path / 'out' / 'hydro').exists()

    def test_valid_override_is_layered(self, tmp_path, fresh_settings):
        argv = ['--config', override(tmp_path, '[detector]\ndynaconf_merge = true\nalpha = 4.0\n'),
                '--out', str(tmp_path), 'frd-synth']
        assert run(started(argv)) == 0
        effective = {key.lower(): value for key, value in
                     json.loads((tmp_path / 'effective_settings.json').read_text()).items()}
        assert effective['detector']['alpha'] == 4.0
        assert effective['detector']['hold'] == cc.default_settings.detector.hold


class TestDataCommands:
    def test_frd_synth(self, tmp_path, capsys):
        assert run(started(['--out', str(tmp_path), 'frd-synth'])) == 0
        assert (tmp_path / 'hydro' / 'frd.csv').exists() and (tmp_path / 'hydro' / 'ainf.csv').exists()
        assert (tmp_path / 'effective_settings.json').exists()
        assert '200 frequencies' in capsys.readouterr().out

    def test_wave_export(self, tmp_path):
        path = tmp_path / 'records' / 'wave.csv'
        assert run(started(['--out', str(tmp_path), '--seed', '3', 'wave-export', '--path', str(path)])) == 0
        lines = path.read_text().splitlines()
        assert lines[0] == 't,eta' and len(lines) == 16002
