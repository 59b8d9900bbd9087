import os
import stat
import shutil

from nlrabi.model import ModelParams
from nlrabi.utils import create_dir_if_not_exists

from nlrabi.log_setup import LoggerManager, logger_init

DATA_DIR = 'tests/data'

# Weak-excitation parameter set used throughout: g/w = 0.1, kappa/w = 0.2, w0/w = 10, U at the antibunching point.
DEFAULT_PARAMS = ModelParams.from_ratios(omega=1.0, omega0=10, g=0.1, U=-20, kappa=0.2)

# Smaller splitting keeps dense Liouvillian work fast while staying in the weak-excitation regime.
SMALL_PARAMS = ModelParams.from_ratios(omega=1.0, omega0=5, g=0.1, U=-10, kappa=0.2)


def common_test_setup():
    # Create a test data directory
    create_dir_if_not_exists(DATA_DIR)


def common_test_teardown():
    # Change folder permissions and delete the directory.
    if os.path.exists(DATA_DIR):
        os.chmod(DATA_DIR, stat.S_IRWXU)
        shutil.rmtree(DATA_DIR)


def common_test_setup_w_logger(config_file: str = None) -> LoggerManager:
    common_test_setup()
    logger_manager: LoggerManager = logger_init(config_file=config_file)
    return logger_manager


def common_test_teardown_w_logger(logger_manager: LoggerManager):
    # Terminate the logger; this also detaches every handler it added.
    logger_manager.terminate_logger()

    common_test_teardown()


def write_config(path: str, sections: dict) -> str:
    """Write an INI file from section -> key -> value."""
    create_dir_if_not_exists(os.path.dirname(path))
    with open(path, 'w') as f:
        for section, values in sections.items():
            f.write(f'[{section}]\n')
            for key, value in values.items():
                f.write(f'{key} = {value}\n')
            f.write('\n')
    return path
