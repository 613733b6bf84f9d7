import logging
import os
from pathlib import Path

from color_logging import ColoramaFormatter

# Logs folder and console level, both overridable from the environment
LOGS_FOLDER = Path(os.environ.get('WORKBENCH_LOGS_FOLDER', Path(__file__).resolve().parent.parent / '.logs'))
CONSOLE_LEVEL = os.environ.get('WORKBENCH_CONSOLE_LEVEL', 'INFO').upper()

SEPARATOR = '{FORE_LIGHTBLACK_EX}:{STYLE_RESET_ALL}'

# Modules whose DEBUG records go to numerics.log instead of the main log
NUMERICAL_MODULES = ('hydro', 'sysid', 'mooring', 'plant', 'linmodel', 'detect', 'state_space')


def _level_colors(color: str) -> dict[str, str]:
    return {
        'levelname': color,
        'name': f'{color},STYLE_DIM',
        'funcName': f'{color},STYLE_DIM',
    }


def build_dict_config(logs_folder: Path = LOGS_FOLDER, console_level: str = CONSOLE_LEVEL) -> dict:
    logs_folder.mkdir(parents=True, exist_ok=True)
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'colorama': {
                '()': ColoramaFormatter,
                'fmt': f'{{levelname:<8}} {SEPARATOR} {{name}} {SEPARATOR} {{message}}',
                'style': '{',
                'color_config': {
                    logging.DEBUG: {'name': 'STYLE_DIM', 'funcName': 'STYLE_DIM'},
                    logging.INFO: _level_colors('FORE_CYAN'),
                    logging.WARNING: _level_colors('FORE_YELLOW'),
                    logging.ERROR: _level_colors('FORE_RED'),
                    logging.CRITICAL: _level_colors('BACK_RED,STYLE_BRIGHT'),
                },
            },
            'file': {
                'format': '[{asctime}] {levelname:<8} : {processName} : {name} : {funcName} : {message}',
                'style': '{',
            },
        },
        'handlers': {
            'stream': {
                'class': 'logging.StreamHandler',
                'level': console_level,
                'formatter': 'colorama',
            },
            'workbench': {
                'class': 'logging.FileHandler',
                'filename': str(logs_folder / 'workbench.log'),
                'mode': 'w',
                'level': 'INFO',
                'formatter': 'file',
            },
            'numerics': {
                'class': 'logging.FileHandler',
                'filename': str(logs_folder / 'numerics.log'),
                'mode': 'w',
                'formatter': 'file',
            },
        },
        'root': {
            'level': 'DEBUG',
            'handlers': ['workbench', 'stream'],
        },
        'loggers': {
            **{name: {'handlers': ['numerics']} for name in NUMERICAL_MODULES},
            'dynaconf': {'level': 'WARNING'},
            'asyncio': {'level': 'WARNING'},
        },
    }


dict_config = build_dict_config()
