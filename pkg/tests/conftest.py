import pytest

from services.scenario import ScenarioConfig, generate


@pytest.fixture
def reference_config():
    """Reference cell: 50 devices, 20 MHz, 200 MHz server, T_max = 5 ms"""
    return ScenarioConfig()


@pytest.fixture
def reference_scenario(reference_config):
    return generate(reference_config)


@pytest.fixture
def overload_config():
    """Two close devices that together overload a 350 kHz server"""
    return ScenarioConfig(
        n_users=2,
        bandwidth=800e3,
        downlink_bandwidth=800e3,
        server_capacity=350e3,
        t_max=5e-3,
        distances={0: 100.0, 1: 300.0},
    )


@pytest.fixture
def overload_scenario(overload_config):
    return generate(overload_config)


@pytest.fixture
def drop_config(overload_config):
    """A near and a gate-edge device; the server only fits part of the near one"""
    return overload_config.with_updates(server_capacity=200e3, distances={0: 50.0, 1: 460.0})


@pytest.fixture
def tiny_gamma_config():
    """T_max below k with a server so fast that the margin-capped shares fit"""
    return ScenarioConfig(
        n_users=2,
        bandwidth=800e3,
        downlink_bandwidth=800e3,
        server_capacity=1.4e13,
        t_max=1e-3,
        distances={0: 100.0, 1: 200.0},
    )


@pytest.fixture
def write_config(tmp_path):
    """Write config text to a file and return its path as str"""
    def _write(text, name='cell.cfg'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write
