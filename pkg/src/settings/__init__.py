import json
from pathlib import Path

import dynaconf
from dynaconf import Validator

SETTINGS_PATH = Path(__file__).resolve().parent / 'settings.toml'

CASE_KINDS = ('fairlead_release', 'anchor_slip')
DOF_NAMES = ('surge', 'sway', 'heave', 'roll', 'pitch', 'yaw')


class CustomDynaconf(dynaconf.Dynaconf):
    """Dynaconf class with methods to layer a user file and save the effective settings"""

    def load_user_file(self, path: str | Path) -> None:
        """Merge a user configuration file on top of the defaults and re-run the validators"""
        self.load_file(path=str(path))
        self.validators.validate()

    def persist(self, path: str | Path) -> None:
        # https://www.dynaconf.com/advanced/#exporting
        with open(path, 'w') as file:
            json.dump(self.to_dict(), file, indent=4, default=str)


def _positive(key: str) -> Validator:
    return Validator(key, must_exist=True, gt=0)


validators = [
    _positive('turbine.rated_power'),
    _positive('turbine.rated_rotor_speed_rpm'),
    _positive('turbine.rotor_radius'),
    _positive('turbine.hub_height'),
    _positive('turbine.j_rotor'),
    _positive('turbine.gearbox_ratio'),
    _positive('platform.displacement'),
    _positive('platform.rho_water'),
    _positive('platform.gravity'),
    _positive('mooring.water_depth'),
    _positive('mooring.length'),
    _positive('mooring.mass_per_length'),
    _positive('mooring.ea'),
    Validator('mooring.line_angles_deg', must_exist=True, len_min=1),
    _positive('wave.hs'),
    _positive('wave.tp'),
    Validator('wave.gamma', must_exist=True, gte=1.0),
    _positive('wave.omega_min'),
    Validator('wave.n_omega', must_exist=True, gte=2),
    Validator('identification.radiation_order', 'identification.wave_order', must_exist=True, gte=1),
    Validator('identification.causal_shift', must_exist=True, gte=0.0),
    Validator('identification.radiation_dofs', 'identification.wave_dofs',
              must_exist=True, condition=lambda dofs: bool(dofs) and all(dof in DOF_NAMES for dof in dofs),
              messages={'condition': '{name} must list names among ' + ', '.join(DOF_NAMES)}),
    _positive('simulation.duration'),
    Validator('simulation.dt_out', 'simulation.dt_inner', must_exist=True, gt=0, lte=1),
    Validator('simulation.wind_speed', must_exist=True, gte=0.0),
    Validator('noise.rotor_speed', 'noise.surge', 'noise.pitch', must_exist=True, gte=0.0),
    # The Chebyshev bound 1/alpha**2 is only a probability for alpha > 1
    Validator('detector.alpha', must_exist=True, gt=1),
    Validator('detector.hold', must_exist=True, gte=1),
    Validator('detector.baseline_stop', must_exist=True, gt=0.0),
    Validator('scenarios.anchor_slip_reading', must_exist=True, is_in=['added_seabed_length', 'absolute']),
    Validator('scenarios.cases', must_exist=True,
              condition=lambda cases: all(case.get('kind') in CASE_KINDS for case in cases),
              messages={'condition': 'every scenario case kind must be one of ' + ', '.join(CASE_KINDS)}),
    Validator('seeds.base', must_exist=True, is_type_of=int),
]


def build_settings() -> CustomDynaconf:
    """Fresh settings object holding the defaults and the environment overrides"""
    return CustomDynaconf(
        settings_files=[SETTINGS_PATH],
        envvar_prefix='WORKBENCH',
        validators=validators,
    )


settings = build_settings()
