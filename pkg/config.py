import os
from dotenv import load_dotenv

load_dotenv()


def _optional_int(name):
    value = os.getenv(name)
    if value is None or value.strip() == '':
        return None
    return int(value)


class Config:
    """Process-level settings"""

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()

    # Worker cap for sweeps (unset -> executor default)
    THREADS = _optional_int('OFFLOAD_OPT_THREADS')

    # Solver defaults
    LOAD_TOLERANCE = float(os.getenv('LOAD_TOLERANCE', '1e-9'))
    EXECUTION_MARGIN = float(os.getenv('EXECUTION_MARGIN', '1e-6'))

    # Oracle defaults
    ORACLE_GRID_STEP = float(os.getenv('ORACLE_GRID_STEP', '0.005'))
    ORACLE_MAX_USERS = int(os.getenv('ORACLE_MAX_USERS', 3))

    # Sweep defaults
    CUTOFF_SLOPE_TOL = float(os.getenv('CUTOFF_SLOPE_TOL', '1e-6'))  # per second

    # Energy gate radius as a fraction of the cell radius when G is auto
    GATE_TARGET_RATIO = float(os.getenv('GATE_TARGET_RATIO', '0.58'))
