"""
Scenario generation: homogeneous devices placed uniformly in a disk.
"""
import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import Config
from .edge_model import (
    CloudServer,
    ComputeProfile,
    DataProfile,
    RadioLink,
    Scenario,
    UserDevice,
    calibrated_attenuation,
)

logger = logging.getLogger(__name__)


class ScenarioConfig(BaseModel):
    """Cell parameters in SI units; defaults are the reference simulation setup"""
    model_config = ConfigDict(frozen=True)

    n_users: int = Field(default=50, ge=1)
    cell_radius: float = Field(default=800.0, gt=0, description="[m]")
    reference_distance: float = Field(default=200.0, gt=0, description="[m]")
    pathloss_exponent: float = Field(default=2.0, gt=0)
    bandwidth: float = Field(default=20e6, gt=0, description="Cell uplink bandwidth B [Hz]")
    bandwidth_fraction: float = Field(default=1.0, gt=0, le=1)
    downlink_bandwidth: float = Field(default=20e6, gt=0, description="[Hz]")
    spectral_efficiency_up: float = Field(default=6.0, gt=0, description="[bit/s/Hz]")
    spectral_efficiency_down: float = Field(default=6.0, gt=0, description="[bit/s/Hz]")
    server_capacity: float = Field(default=200e6, gt=0, description="[cycles/s]")
    t_max: float = Field(default=5e-3, gt=0, description="Delay budget [s]")
    sensors: int = Field(default=10, ge=1)
    elements: int = Field(default=70, ge=1)
    bits_per_element: int = Field(default=8, ge=1)
    result_bits_per_sensor: int = Field(default=8, ge=1)
    complexity_exponent: float = Field(default=1.0, gt=0)
    device_cycles_per_element: float = Field(default=100.0, gt=0)
    server_cycles_per_element: float = Field(default=1.0, gt=0)
    energy_per_cycle: float = Field(default=5e-9, gt=0, description="[J]")
    attenuation_g: Optional[float] = Field(default=None, gt=0, description="None calibrates G")
    noise_psd: float = Field(default=4e-21, gt=0, description="[W/Hz], -174 dBm/Hz")
    seed: int = Field(default=1, ge=0, lt=2 ** 64)
    distances: Optional[Dict[int, float]] = Field(
        default=None, description="Explicit placement by user id; overrides the seed"
    )

    @model_validator(mode='after')
    def _placement_matches_users(self):
        if self.distances is not None:
            if len(self.distances) != self.n_users:
                raise ValueError(f"{len(self.distances)} distances given for {self.n_users} users")
            if any(d < 0 for d in self.distances.values()):
                raise ValueError("distances must be non-negative")
            outside = sorted(uid for uid, d in self.distances.items() if d > self.cell_radius)
            if outside:
                raise ValueError(f"users {outside} lie outside the {self.cell_radius} m cell")
        return self

    def data_profile(self) -> DataProfile:
        return DataProfile(
            sensors_l=self.sensors,
            elements_m=self.elements,
            bits_per_element_s=self.bits_per_element,
            result_bits_per_sensor_srx=self.result_bits_per_sensor,
            complexity_exponent=self.complexity_exponent,
        )

    def compute_profile(self) -> ComputeProfile:
        return ComputeProfile(
            cycles_per_element_device_eta=self.device_cycles_per_element,
            cycles_per_element_server_etas=self.server_cycles_per_element,
            energy_per_cycle_eps=self.energy_per_cycle,
        )

    def resolved_attenuation(self) -> float:
        """Configured G, or the G that puts the energy gate at GATE_TARGET_RATIO * R"""
        if self.attenuation_g is not None:
            return self.attenuation_g
        return calibrated_attenuation(
            self.data_profile(),
            self.compute_profile(),
            spectral_eff=self.spectral_efficiency_up,
            noise_psd=self.noise_psd,
            reference_distance=self.reference_distance,
            pathloss_exponent=self.pathloss_exponent,
            threshold_distance=Config.GATE_TARGET_RATIO * self.cell_radius,
        )

    def with_updates(self, **changes) -> 'ScenarioConfig':
        """Validated copy with some fields replaced"""
        return ScenarioConfig(**{**self.model_dump(), **changes})


class PlacementSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    user_id: int
    distance_d: float = Field(ge=0)


def place_users(config: ScenarioConfig) -> List[PlacementSample]:
    """
    Area-uniform placement in a disk of radius R.

    Uses numpy's PCG64 bit generator seeded with config.seed, one stream,
    one draw per user: d = R * sqrt(u) with u uniform on [0, 1).
    """
    if config.distances is not None:
        return [PlacementSample(user_id=uid, distance_d=d) for uid, d in config.distances.items()]
    rng = np.random.Generator(np.random.PCG64(config.seed))
    radii = config.cell_radius * np.sqrt(rng.random(config.n_users))
    return [PlacementSample(user_id=i, distance_d=float(d)) for i, d in enumerate(radii)]


def generate(config: ScenarioConfig) -> Scenario:
    """Build the scenario described by config (deterministic in config and seed)"""
    data = config.data_profile()
    compute = config.compute_profile()
    g = config.resolved_attenuation()
    n = config.n_users
    uplink_share = (config.bandwidth_fraction * config.bandwidth) / n
    downlink_share = config.downlink_bandwidth / n

    users = [
        UserDevice(
            id=sample.user_id,
            data=data,
            compute=compute,
            link=RadioLink(
                distance_d=sample.distance_d,
                reference_distance_d0=config.reference_distance,
                pathloss_exponent_beta=config.pathloss_exponent,
                attenuation_g=g,
                noise_psd_n0=config.noise_psd,
                uplink_bandwidth_bi=uplink_share,
                uplink_spectral_eff_ri=config.spectral_efficiency_up,
                downlink_bandwidth_brx=downlink_share,
                downlink_spectral_eff_rrx=config.spectral_efficiency_down,
            ),
        )
        for sample in place_users(config)
    ]
    logger.debug(f"Generated {n} users (seed={config.seed}, explicit={config.distances is not None})")

    return Scenario(
        users=users,
        server=CloudServer(capacity_cs=config.server_capacity),
        delay_budget_tmax=config.t_max,
        total_uplink_bandwidth_b=config.bandwidth,
        total_downlink_bandwidth_brx=config.downlink_bandwidth,
        cell_radius_r=config.cell_radius,
        bandwidth_fraction=config.bandwidth_fraction,
        seed=config.seed,
    )


def config_from_scenario(s: Scenario) -> ScenarioConfig:
    """Config (with explicit distances) that regenerates s; profiles must be homogeneous"""
    first = s.users[0]
    for u in s.users[1:]:
        same_link = u.link.model_copy(update={'distance_d': first.link.distance_d}) == first.link
        if u.data != first.data or u.compute != first.compute or not same_link:
            raise ValueError(f"user {u.id} differs from user {first.id}; only homogeneous profiles serialize")
    link = first.link
    return ScenarioConfig(
        n_users=s.n_users,
        cell_radius=s.cell_radius_r,
        reference_distance=link.reference_distance_d0,
        pathloss_exponent=link.pathloss_exponent_beta,
        bandwidth=s.total_uplink_bandwidth_b,
        bandwidth_fraction=s.bandwidth_fraction,
        downlink_bandwidth=s.total_downlink_bandwidth_brx,
        spectral_efficiency_up=link.uplink_spectral_eff_ri,
        spectral_efficiency_down=link.downlink_spectral_eff_rrx,
        server_capacity=s.server.capacity_cs,
        t_max=s.delay_budget_tmax,
        sensors=first.data.sensors_l,
        elements=first.data.elements_m,
        bits_per_element=first.data.bits_per_element_s,
        result_bits_per_sensor=first.data.result_bits_per_sensor_srx,
        complexity_exponent=first.data.complexity_exponent,
        device_cycles_per_element=first.compute.cycles_per_element_device_eta,
        server_cycles_per_element=first.compute.cycles_per_element_server_etas,
        energy_per_cycle=first.compute.energy_per_cycle_eps,
        attenuation_g=link.attenuation_g,
        noise_psd=link.noise_psd_n0,
        seed=s.seed if s.seed is not None else ScenarioConfig().seed,
        distances={u.id: u.link.distance_d for u in s.users},
    )
