from .config_parser import ScenarioFormatError, parse_config, parse_quantity, serialize_config, serialize_scenario
from .csv_writer import read_solution, write_cutoff, write_solution, write_sweep

__all__ = [
    'ScenarioFormatError', 'parse_config', 'parse_quantity', 'serialize_config', 'serialize_scenario',
    'read_solution', 'write_cutoff', 'write_solution', 'write_sweep',
]
