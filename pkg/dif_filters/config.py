# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0

import configparser
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple  # noqa: F401

from dif_filters.base.bench import SweepSpec, normalize_algorithms
from dif_filters.base.constants import (ALL_ALGORITHMS, DEFAULT_MAX_ITERS,
                                        DEFAULT_TOL)
from dif_filters.base.dif import DifConfig
from dif_filters.base.exceptions import ConfigError
from dif_filters.base.output_helpers import note_print

VALID_OPTIONS = [
    'q1_grid',
    'sigma2_grid',
    'q2',
    't',  # configparser lowercases option names
    'n_trajectories',
    'n_targets_per_trajectory',
    'k',
    'master_seed',
    'max_iters',
    'tol',
    'algorithms',
    'workers',
]


class Config:
    CONFIG_FILENAMES = ['dif-filters.cfg', 'config.cfg', 'tox.ini']

    def __init__(self, config_name='dif-filters', env_path='DIF_FILTERS_CFGFILE') -> None:
        self.config_name = config_name
        self.env_var_name = env_path

    def _read(self, file_path):  # type: (str) -> configparser.ConfigParser
        config = configparser.ConfigParser()
        with open(file_path, encoding='UTF-8') as f:
            text = f.read()
        try:
            config.read_string(text, source=file_path)
        except configparser.MissingSectionHeaderError:
            # a plain key = value file is taken as our section
            config.read_string(f'[{self.config_name}]\n{text}', source=file_path)
        return config

    def validate_configuration(self, file_path, verbose=False):
        if not os.path.exists(file_path):
            return False

        config = configparser.RawConfigParser()
        try:
            config.read(file_path, encoding='UTF-8')
            # Check if config has a [dif-filters] section to determine validity
            if config.has_section(self.config_name):
                if verbose:
                    self._note_unknown(config)
                return True
        except (UnicodeDecodeError, configparser.Error) as e:
            if verbose:
                note_print(f'Ignoring invalid configuration file {file_path}: {e}')
        return False

    def _note_unknown(self, config):  # type: (configparser.RawConfigParser) -> None
        unknown_options = sorted(set(config.options(self.config_name)) - set(VALID_OPTIONS))
        if unknown_options:
            note_print(f"Ignoring unknown configuration options: {', '.join(unknown_options)}")

    def find_configuration_file(self, dir_path, verbose=False):
        for file_name in self.CONFIG_FILENAMES:
            config_path = os.path.join(dir_path, file_name)
            if self.validate_configuration(config_path, verbose):
                return config_path
        return None

    def load_configuration(self, file_path=None, verbose=False):
        # type: (Optional[str], bool) -> Tuple[configparser.ConfigParser, Optional[str]]
        """
        Reads `file_path` if given, otherwise searches the environment variable, the current
        directory, the OS-specific config directory and the home directory, in that order.
        """
        set_with_env_var = False
        config_file_path = None  # type: Optional[str]
        if file_path is not None:
            if not os.path.isfile(file_path):
                raise FileNotFoundError(f'Configuration file {file_path} does not exist')
            config_file_path = file_path
        else:
            env_var_path = os.environ.get(self.env_var_name)
            if env_var_path is not None and self.validate_configuration(env_var_path):
                config_file_path = env_var_path
                set_with_env_var = True
            else:
                home_dir = os.path.expanduser('~')
                os_config_dir = (
                    f'{home_dir}/.config/{self.config_name}'
                    if os.name == 'posix'
                    else f'{home_dir}/AppData/Local/{self.config_name}/'
                )
                # Search priority: 1) current directory, 2) OS-specific config directory, 3) home directory
                for dir_path in (os.getcwd(), os_config_dir, home_dir):
                    config_file_path = self.find_configuration_file(dir_path, verbose)
                    if config_file_path:
                        break

        config = configparser.ConfigParser()
        # Create an empty configuration when no file is found
        config[self.config_name] = {}

        if config_file_path is not None:
            try:
                config = self._read(config_file_path)
            except configparser.Error as e:
                raise ConfigError(getattr(e, 'option', None) or 'file', f'{config_file_path}: {e}')
            if not config.has_section(self.config_name):
                config[self.config_name] = {}
            if verbose:
                self._note_unknown(config)
                msg = f' (set with {self.env_var_name} environment variable)' if set_with_env_var else ''
                note_print(
                    f'Loaded custom configuration from {os.path.abspath(config_file_path)}{msg}'
                )
        return config, config_file_path


@dataclass(frozen=True)
class SweepSettings:
    spec: SweepSpec
    dif_cfg: DifConfig
    algorithms: Tuple[str, ...]
    workers: int = 1


def _float_list(text):  # type: (str) -> Tuple[float, ...]
    values = tuple(float(v) for v in text.split(',') if v.strip())
    if not values:
        raise ValueError('expected a comma-separated list of numbers')
    return values


def _int(text):  # type: (str) -> int
    return int(text, 0)


def _name_list(text):  # type: (str) -> Tuple[str, ...]
    return normalize_algorithms(text.split(','))


# option -> (SweepSpec field or None, parser)
_SPEC_FIELDS = {
    'q1_grid': ('q1_grid', _float_list),
    'sigma2_grid': ('sigma2_grid', _float_list),
    'q2': ('q2', float),
    't': ('T', float),
    'n_trajectories': ('n_trajectories', _int),
    'n_targets_per_trajectory': ('n_targets_per_trajectory', _int),
    'k': ('K', _int),
    'master_seed': ('master_seed', _int),
}  # type: Dict[str, Tuple[str, Callable]]


def _get(section, option, parse):  # type: (configparser.SectionProxy, str, Callable) -> object
    raw = section.get(option)
    try:
        return parse(raw.strip())
    except ValueError as e:
        raise ConfigError(option, f'"{raw}" ({e})')


def sweep_settings(config, config_name='dif-filters'):
    # type: (configparser.ConfigParser, str) -> SweepSettings
    """
    Turns a loaded configuration into typed sweep settings; missing options keep their
    defaults. Raises ConfigError naming the first option that does not parse or is out of range.
    """
    section = config[config_name]
    spec_kwargs = {}  # type: Dict[str, object]
    for option, (name, parse) in _SPEC_FIELDS.items():
        if option in section:
            value = _get(section, option, parse)
            try:
                SweepSpec(**{name: value})
            except ValueError as e:
                raise ConfigError(option, str(e))
            spec_kwargs[name] = value
    spec = SweepSpec(**spec_kwargs)  # type: ignore

    max_iters = _get(section, 'max_iters', _int) if 'max_iters' in section else DEFAULT_MAX_ITERS
    tol = _get(section, 'tol', float) if 'tol' in section else DEFAULT_TOL
    try:
        dif_cfg = DifConfig(max_iters=max_iters, tol=tol)  # type: ignore
    except ValueError as e:
        raise ConfigError('max_iters' if 'max_iters' in str(e) else 'tol', str(e))

    algorithms = _get(section, 'algorithms', _name_list) if 'algorithms' in section else ALL_ALGORITHMS
    workers = _get(section, 'workers', _int) if 'workers' in section else 1
    if workers < 1:  # type: ignore
        raise ConfigError('workers', f'must be at least 1, got {workers}')
    return SweepSettings(spec, dif_cfg, algorithms, workers)  # type: ignore
