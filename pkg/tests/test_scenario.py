"""
Placement, config parsing and scenario round-trips
"""
import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from services.scenario import ScenarioConfig, config_from_scenario, generate, place_users
from utils.config_parser import (
    ScenarioFormatError,
    parse_config,
    parse_quantity,
    serialize_config,
    serialize_scenario,
)


class TestPlacement:
    def test_same_seed_same_cell(self, reference_config):
        assert generate(reference_config) == generate(reference_config)

    def test_different_seed_moves_devices(self, reference_config):
        a = [s.distance_d for s in place_users(reference_config)]
        b = [s.distance_d for s in place_users(reference_config.with_updates(seed=2))]
        assert a != b

    def test_distances_are_area_uniform(self, reference_config):
        config = reference_config.with_updates(n_users=10_000, seed=3)
        d = np.array([s.distance_d for s in place_users(config)])
        assert d.min() >= 0 and d.max() < config.cell_radius
        # (d/R)^2 is uniform on [0, 1) for area-uniform points
        assert stats.kstest((d / config.cell_radius) ** 2, 'uniform').pvalue > 0.01

    def test_explicit_distances_override_seed(self, overload_config):
        samples = place_users(overload_config)
        assert [(s.user_id, s.distance_d) for s in samples] == [(0, 100.0), (1, 300.0)]

    def test_distance_count_must_match(self, overload_config):
        with pytest.raises(ValidationError, match="distances given"):
            overload_config.with_updates(n_users=3)

    def test_distance_beyond_cell_rejected(self, overload_config):
        with pytest.raises(ValidationError, match=r"users \[1\] lie outside"):
            overload_config.with_updates(distances={0: 100.0, 1: 900.0})
        edge = overload_config.with_updates(distances={0: 100.0, 1: 800.0})
        assert place_users(edge)[1].distance_d == 800.0

    def test_distance_beyond_cell_is_format_error(self):
        with pytest.raises(ScenarioFormatError):
            parse_config("n_users = 1\ncell_radius = 500 m\n[distances]\n0 = 600\n")

    def test_bandwidth_split(self, reference_config):
        scenario = generate(reference_config.with_updates(bandwidth_fraction=0.4))
        assert scenario.users[0].link.uplink_bandwidth_bi == pytest.approx(0.4 * 20e6 / 50)
        assert scenario.users[0].link.downlink_bandwidth_brx == pytest.approx(20e6 / 50)
        assert scenario.bandwidth_fraction == 0.4

    def test_single_device(self, reference_config):
        scenario = generate(reference_config.with_updates(n_users=1))
        assert scenario.n_users == 1
        assert scenario.users[0].link.uplink_bandwidth_bi == 20e6


class TestQuantities:
    @pytest.mark.parametrize('text,dimension,expected', [
        ('5 ms', 'time', 5e-3),
        ('0.004', 'time', 4e-3),
        ('0.4MHz', 'frequency', 4e5),
        ('350 kHz', 'frequency', 3.5e5),
        ('5e-6 mJ', 'energy', 5e-9),
        ('800m', 'length', 800.0),
    ])
    def test_units_convert_to_si(self, text, dimension, expected):
        assert parse_quantity(text, dimension) == pytest.approx(expected, rel=1e-15)

    def test_unit_of_wrong_dimension(self):
        with pytest.raises(ValueError, match="not allowed"):
            parse_quantity('5 MHz', 'time')

    def test_not_a_number(self):
        with pytest.raises(ValueError, match="not a number"):
            parse_quantity('fast', 'time')


class TestConfigParsing:
    def test_empty_document_gives_reference_defaults(self):
        assert parse_config("# nothing here\n\n") == ScenarioConfig()

    def test_keys_units_and_distances(self):
        config = parse_config(
            "n_users = 2   # two devices\n"
            "t_max = 5 ms\n"
            "server_capacity = 350 kHz\n"
            "bandwidth = 0.8 MHz\n"
            "downlink_bandwidth = 800 kHz\n"
            "energy_per_cycle = 5e-6 mJ\n"
            "attenuation_g = auto\n"
            "\n"
            "[distances]\n"
            "0 = 100\n"
            "1 = 300 m\n"
        )
        assert config.n_users == 2
        assert config.t_max == pytest.approx(5e-3)
        assert config.server_capacity == pytest.approx(3.5e5)
        assert config.energy_per_cycle == pytest.approx(5e-9)
        assert config.attenuation_g is None
        assert config.distances == {0: 100.0, 1: 300.0}

    @pytest.mark.parametrize('text,line,message', [
        ("n_users = 2\nwarp_factor = 9\n", 2, "unknown key"),
        ("t_max = 5 MHz\n", 1, "not allowed"),
        ("t_max = 5ms\nt_max = 6ms\n", 2, "duplicate key"),
        ("n_users = 2.5\n", 1, "integer"),
        ("n_users = 0\n", 1, "positive"),
        ("bandwidth_fraction = 1.5\n", 1, "at most 1"),
        ("just some words\n", 1, "key = value"),
        ("n_users = 1\n[distances]\n0 = -5\n", 3, "negative"),
        ("n_users = 1\n[distances]\nzero = 5\n", 3, "bad distance"),
        ("[users]\n", 1, "unknown section"),
    ])
    def test_errors_name_the_line(self, text, line, message):
        with pytest.raises(ScenarioFormatError, match=message) as info:
            parse_config(text, source='cell.cfg')
        assert info.value.line == line
        assert f"cell.cfg:line {line}:" in str(info.value)

    def test_inconsistent_document_has_no_line(self):
        with pytest.raises(ScenarioFormatError, match="invalid scenario") as info:
            parse_config("n_users = 3\n[distances]\n0 = 10\n")
        assert info.value.line is None


class TestRoundTrip:
    def test_scenario_survives_serialization(self, reference_scenario):
        text = serialize_scenario(reference_scenario)
        assert generate(parse_config(text)) == reference_scenario

    def test_serialized_attenuation_is_resolved(self, reference_config):
        text = serialize_config(reference_config)
        assert 'attenuation_g = auto' not in text
        assert parse_config(text).attenuation_g == reference_config.resolved_attenuation()

    def test_serialization_is_stable(self, reference_scenario):
        assert serialize_scenario(reference_scenario) == serialize_scenario(reference_scenario)

    def test_config_from_scenario_pins_distances(self, reference_scenario):
        config = config_from_scenario(reference_scenario)
        assert len(config.distances) == reference_scenario.n_users
        assert config.seed == reference_scenario.seed

    def test_heterogeneous_profiles_do_not_serialize(self, overload_scenario):
        users = list(overload_scenario.users)
        users[1] = users[1].model_copy(update={
            'compute': users[1].compute.model_copy(update={'energy_per_cycle_eps': 1e-9})
        })
        odd = overload_scenario.model_copy(update={'users': users})
        with pytest.raises(ValueError, match="homogeneous"):
            config_from_scenario(odd)
