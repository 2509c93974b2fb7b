"""
Line-oriented scenario files.

    # comment
    key = value [unit]
    ...
    [distances]
    user_id = meters

Numeric values may carry a unit suffix matching the key's dimension
(ms|s for time, Hz|kHz|MHz for rates, mJ|J for energy, m for lengths) and are
converted to SI on ingestion. Omitted keys take the reference defaults.
"""
import logging
import re
from typing import Dict, Optional, Tuple

from pydantic import ValidationError

from services.scenario import ScenarioConfig, config_from_scenario
from services.edge_model import Scenario

logger = logging.getLogger(__name__)


class ScenarioFormatError(ValueError):
    """Malformed config, scenario or solution text"""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = ''
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif source:
            where += ' '
        super().__init__(f"{where}{message}")


UNIT_SCALES = {
    'time': {'s': 1.0, 'ms': 1e-3},
    'frequency': {'Hz': 1.0, 'kHz': 1e3, 'MHz': 1e6},
    'energy': {'J': 1.0, 'mJ': 1e-3},
    'length': {'m': 1.0},
    None: {},
}

# key -> (dimension, integer?)
KEYS: Dict[str, Tuple[Optional[str], bool]] = {
    'n_users': (None, True),
    'cell_radius': ('length', False),
    'reference_distance': ('length', False),
    'pathloss_exponent': (None, False),
    'bandwidth': ('frequency', False),
    'bandwidth_fraction': (None, False),
    'downlink_bandwidth': ('frequency', False),
    'spectral_efficiency_up': (None, False),
    'spectral_efficiency_down': (None, False),
    'server_capacity': ('frequency', False),
    't_max': ('time', False),
    'sensors': (None, True),
    'elements': (None, True),
    'bits_per_element': (None, True),
    'result_bits_per_sensor': (None, True),
    'complexity_exponent': (None, False),
    'device_cycles_per_element': (None, False),
    'server_cycles_per_element': (None, False),
    'energy_per_cycle': ('energy', False),
    'attenuation_g': (None, False),
    'noise_psd': (None, False),
    'seed': (None, True),
}

_QUANTITY = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$')


def parse_quantity(text: str, dimension: Optional[str] = None) -> float:
    """Parse '5 ms', '0.4MHz' or '2e-3' into SI; raises ValueError"""
    match = _QUANTITY.match(text)
    if not match:
        raise ValueError(f"not a number: {text.strip()!r}")
    number, unit = match.groups()
    if not unit:
        return float(number)
    scales = UNIT_SCALES[dimension]
    if unit not in scales:
        allowed = '|'.join(scales) or 'none'
        raise ValueError(f"unit {unit!r} not allowed here (allowed: {allowed})")
    return float(number) * scales[unit]


def _parse_value(key: str, raw: str):
    dimension, integer = KEYS[key]
    if key == 'attenuation_g' and raw.strip().lower() == 'auto':
        return None
    if integer:
        if not re.fullmatch(r'\s*[-+]?\d+\s*', raw):
            raise ValueError(f"{key} must be an integer, got {raw.strip()!r}")
        value = int(raw)
        if key == 'seed':
            if value < 0:
                raise ValueError("seed must be non-negative")
        elif value < 1:
            raise ValueError(f"{key} must be positive, got {value}")
        return value
    value = parse_quantity(raw, dimension)
    if value <= 0:
        raise ValueError(f"{key} must be positive, got {value}")
    if key == 'bandwidth_fraction' and value > 1:
        raise ValueError(f"bandwidth_fraction must be at most 1, got {value}")
    return value


def parse_config(text: str, source: Optional[str] = None) -> ScenarioConfig:
    """
    Parse a config or serialized scenario document

    Args:
        text: Document contents
        source: File name used in error messages

    Returns:
        ScenarioConfig; a [distances] block becomes its explicit placement
    """
    values = {}
    distances: Optional[Dict[int, float]] = None
    section = None

    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split('#', 1)[0].strip()
        if not content:
            continue
        if content.startswith('[') and content.endswith(']'):
            section = content[1:-1].strip()
            if section != 'distances':
                raise ScenarioFormatError(f"unknown section [{section}]", number, source)
            if distances is not None:
                raise ScenarioFormatError("duplicate [distances] section", number, source)
            distances = {}
            continue
        if '=' not in content:
            raise ScenarioFormatError(f"expected 'key = value', got {content!r}", number, source)
        key, raw = (part.strip() for part in content.split('=', 1))

        if section == 'distances':
            try:
                user_id = int(key)
                distance = parse_quantity(raw, 'length')
            except ValueError as e:
                raise ScenarioFormatError(f"bad distance entry: {e}", number, source)
            if distance < 0:
                raise ScenarioFormatError(f"distance of user {user_id} is negative", number, source)
            if user_id in distances:
                raise ScenarioFormatError(f"duplicate distance for user {user_id}", number, source)
            distances[user_id] = distance
            continue

        if key not in KEYS:
            raise ScenarioFormatError(f"unknown key {key!r}", number, source)
        if key in values:
            raise ScenarioFormatError(f"duplicate key {key!r}", number, source)
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as e:
            raise ScenarioFormatError(str(e), number, source)

    if distances is not None:
        values['distances'] = distances
    try:
        return ScenarioConfig(**values)
    except ValidationError as e:
        raise ScenarioFormatError(f"invalid scenario: {e.errors()[0]['msg']}", None, source)


def serialize_config(config: ScenarioConfig) -> str:
    """Self-contained document in SI units; float values use round-trip repr"""
    lines = ["# edge offloading scenario (SI units)"]
    for key in KEYS:
        value = getattr(config, key)
        if key == 'attenuation_g':
            value = config.resolved_attenuation()
        lines.append(f"{key} = {value!r}")
    if config.distances is not None:
        lines.append("")
        lines.append("[distances]")
        for user_id, distance in config.distances.items():
            lines.append(f"{user_id} = {distance!r}")
    return "\n".join(lines) + "\n"


def serialize_scenario(s: Scenario) -> str:
    """Document that parses and regenerates s exactly"""
    return serialize_config(config_from_scenario(s))
