import os

from pathlib import Path

from typing import Dict, List, Optional, Union

from configparser import ConfigParser

from nlrabi.errors import ConfigError
from nlrabi.model import ModelParams

# Environment variable -> (section, key).
ENV_OVERRIDES = {
    'NLRABI_LOG_DIR': ('LOGGING', 'log_dir'),
    'NLRABI_MAX_BYTES': ('LOGGING', 'max_bytes'),
    'NLRABI_BACKUP_COUNT': ('LOGGING', 'backup_count'),
    'NLRABI_PRE_PURGE': ('LOGGING', 'pre_purge'),
    'NLRABI_N_MAX': ('NUMERICS', 'n_max'),
    'NLRABI_JOBS': ('NUMERICS', 'jobs'),
    'NLRABI_SEED': ('NUMERICS', 'seed'),
    'NLRABI_OUT_DIR': ('NUMERICS', 'out_dir'),
}


def _new_parser() -> ConfigParser:
    config = ConfigParser()
    # U and u are different things here.
    config.optionxform = str
    return config


def _override_config(config: ConfigParser) -> ConfigParser:
    """
    This function loads configurations from the system's environment variables to override the default values and
    the values of a config file.

    Args:
        config: A ConfigParser instance to load configurations into.

    Returns: A ConfigParser instance with updated configurations.

    """
    for variable, (section, key) in ENV_OVERRIDES.items():
        if variable in os.environ:
            config[section][key] = os.environ[variable]
    return config


def _default_config() -> ConfigParser:
    """
    This function generates the default configuration. Rates in MODEL are ratios to omega, except omega itself which
    sets the absolute scale; trajectory times are in units of 1/omega, spectrum frequencies in units of omega and
    correlation delays in units of 1/kappa.

    Returns:
        A ConfigParser instance with default configurations.
    """
    config = _new_parser()
    config.read_dict({
        'MODEL': {
            'omega': '1.0',
            'omega0': '10',
            'g': '0.1',
            'U': '-20',
            'kappa': '0.2',
        },
        'NUMERICS': {
            'n_max': '15',
            'cutoff_tol': '1e-8',
            'jobs': '1',
            'seed': '1234',
            'out_dir': 'results',
        },
        'SWEEP': {
            'axis': 'U',
            'grid': '',
            'start': '-24',
            'stop': '6',
            'num': '121',
            'outputs': 'photon_number, inversion, g2_zero',
            'engines': 'master, analytic',
        },
        'TRAJECTORY': {
            'initial_qubit': 'e',
            'n_trajectories': '1',
            't_total': '100000',
            't_burn': '',
            'dt_max': '1.0',
            'dt_sample': '0.5',
            'n_batches': '20',
            'bin_widths': '0.025, 0.05, 0.1',
        },
        'SPECTRUM': {
            'nu_min': '',
            'nu_max': '',
            'nu_step': '0.005',
            'rel_height': '0.01',
        },
        'CORRELATION': {
            'tau_max': '10',
            'tau_num': '401',
        },
        'LOGGING': {
            'log_dir': 'logs',
            'max_bytes': '10000000',
            'backup_count': '6',
            'pre_purge': 'true',
            'level': 'INFO',
            'console': 'true',
        },
    })
    return config


def get_config(config_file: Union[Path, str] = None) -> ConfigParser:
    """
    Load the defaults, then the config file if given, then environment overrides.

    Args:
        config_file: The path to the config file.

    Returns:
        A ConfigParser instance with the run configuration.

    """
    config = _default_config()

    if config_file is not None:
        if not os.path.exists(config_file):
            raise FileNotFoundError(f"Config file {config_file} not found.")
        config.read(config_file)

    config = _override_config(config)

    return config


def apply_overrides(config: ConfigParser, overrides: Dict[str, Dict[str, Optional[str]]]) -> ConfigParser:
    """
    This function applies CLI flag values on top of a loaded configuration. None values are skipped.

    Args:
        config: The loaded configuration.
        overrides: section -> key -> value.

    Returns:
        The same ConfigParser, updated.
    """
    for section, values in overrides.items():
        for key, value in values.items():
            if value is not None:
                config[section][key] = str(value)
    return config


def get_float(config: ConfigParser, section: str, key: str) -> Optional[float]:
    """Float option, None when the option is blank."""
    raw = config.get(section, key, fallback='').strip()
    if raw == '':
        return None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = '{raw}' is not a number.")


def get_int(config: ConfigParser, section: str, key: str) -> int:
    raw = config.get(section, key, fallback='').strip()
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = '{raw}' is not an integer.")


def get_float_list(config: ConfigParser, section: str, key: str) -> List[float]:
    raw = config.get(section, key, fallback='').strip()
    if raw == '':
        return []
    try:
        return [float(item) for item in raw.split(',') if item.strip()]
    except ValueError:
        raise ConfigError(f"[{section}] {key} = '{raw}' is not a comma separated list of numbers.")


def get_name_list(config: ConfigParser, section: str, key: str) -> List[str]:
    raw = config.get(section, key, fallback='')
    return [item.strip() for item in raw.split(',') if item.strip()]


def model_params_from_config(config: ConfigParser) -> ModelParams:
    """
    This function converts the MODEL section (ratios to omega plus the absolute omega) into ModelParams.

    Args:
        config: The loaded configuration.

    Returns:
        ModelParams in absolute units.
    """
    values = {key: get_float(config, 'MODEL', key) for key in ('omega', 'omega0', 'g', 'U', 'kappa')}
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError(f"[MODEL] is missing {', '.join(missing)}.")
    try:
        return ModelParams.from_ratios(**values)
    except ValueError as e:
        raise ConfigError(f"[MODEL] {e}")
