import sys
from pathlib import Path

import numpy as np
import pytest

SRC = Path(__file__).resolve().parent.parent / 'src'
sys.path.insert(0, str(SRC))

import custom_context as cc  # noqa: E402
import hydro  # noqa: E402
import linmodel  # noqa: E402
import mooring  # noqa: E402
import plant  # noqa: E402
import sysid  # noqa: E402
from settings import settings  # noqa: E402


@pytest.fixture(scope='session')
def config(tmp_path_factory) -> cc.RunConfig:
    """Default configuration writing into a session temporary directory"""
    return cc.RunConfig.from_settings(settings, output_dir=tmp_path_factory.mktemp('output'))


@pytest.fixture(scope='session')
def lines(config) -> list[mooring.MooringLineParams]:
    return mooring.default_mooring_lines(config)


@pytest.fixture(scope='session')
def plant_params(config) -> plant.PlantParams:
    return plant.default_plant_params(config)


@pytest.fixture(scope='session')
def equilibrium(config, plant_params) -> plant.Equilibrium:
    return plant.find_equilibrium(float(config.section('simulation')['wind_speed']), plant_params)


@pytest.fixture(scope='session')
def frd(config) -> hydro.HydroFrd:
    spec = hydro.WaveSpec.from_config(config)
    return hydro.generate_synthetic_hydro_dataset(
        hydro.default_truth_radiation_model(config),
        hydro.default_truth_wave_model(config),
        hydro.default_added_mass(config),
        spec.omega_grid,
        wave_shift=float(config.section('truth_wave')['shift']),
    )


@pytest.fixture(scope='session')
def radiation_fit(frd):
    return sysid.fit_radiation_model(frd, 6)


@pytest.fixture(scope='session')
def wave_fit(frd):
    return sysid.fit_wave_force_model(frd, 8, 4.0)


@pytest.fixture(scope='session')
def assembled(config, plant_params, equilibrium, radiation_fit, wave_fit) -> linmodel.AssembledModel:
    return linmodel.build_operating_model(
        plant_params, float(config.section('simulation')['wind_speed']), radiation_fit[0], wave_fit[0],
        equilibrium=equilibrium,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
