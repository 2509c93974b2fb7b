"""
Physical model of a multi-user edge-cloud cell.

Holds the per-device data, compute and radio profiles, the shared cloud
server, and every delay and energy formula as pure functions of the
offloading share alpha. All quantities are SI: seconds, Hz, joules, bits,
cycles, meters.
"""
import logging
from typing import List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class DataProfile(BaseModel):
    """Sensor data produced by one device"""
    model_config = ConfigDict(frozen=True)

    sensors_l: int = Field(ge=1, description="Number of sensors L")
    elements_m: int = Field(ge=1, description="Data elements per sensor M")
    bits_per_element_s: int = Field(ge=1, description="Bits per data element S")
    result_bits_per_sensor_srx: int = Field(ge=1, description="Result bits per sensor S_rx")
    complexity_exponent: float = Field(default=1.0, gt=0, description="f(M) = M ** exponent")


class ComputeProfile(BaseModel):
    """Cycle costs on the device and on the server"""
    model_config = ConfigDict(frozen=True)

    cycles_per_element_device_eta: float = Field(gt=0, description="Device cycles per data element")
    cycles_per_element_server_etas: float = Field(gt=0, description="Server cycles per data element")
    energy_per_cycle_eps: float = Field(gt=0, description="Device energy per cycle [J]")


class RadioLink(BaseModel):
    """Uplink/downlink of one device"""
    model_config = ConfigDict(frozen=True)

    distance_d: float = Field(ge=0, description="Distance to the base station [m]")
    reference_distance_d0: float = Field(gt=0, description="Path-loss reference distance [m]")
    pathloss_exponent_beta: float = Field(gt=0)
    attenuation_g: float = Field(gt=0, description="Free-space attenuation constant G")
    noise_psd_n0: float = Field(gt=0, description="Noise power spectral density [W/Hz]")
    uplink_bandwidth_bi: float = Field(gt=0, description="Uplink bandwidth share [Hz]")
    uplink_spectral_eff_ri: float = Field(gt=0, description="Uplink spectral efficiency [bit/s/Hz]")
    downlink_bandwidth_brx: float = Field(gt=0, description="Downlink bandwidth share [Hz]")
    downlink_spectral_eff_rrx: float = Field(gt=0, description="Downlink spectral efficiency [bit/s/Hz]")


class UserDevice(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    data: DataProfile
    compute: ComputeProfile
    link: RadioLink


class CloudServer(BaseModel):
    model_config = ConfigDict(frozen=True)

    capacity_cs: float = Field(gt=0, description="Server capacity [cycles/s]")


class Scenario(BaseModel):
    """Complete solver input: N devices sharing one edge server"""
    model_config = ConfigDict(frozen=True)

    users: List[UserDevice]
    server: CloudServer
    delay_budget_tmax: float = Field(gt=0, description="Delay budget T_max [s]")
    total_uplink_bandwidth_b: float = Field(gt=0, description="Cell uplink bandwidth B [Hz]")
    total_downlink_bandwidth_brx: float = Field(gt=0, description="Cell downlink bandwidth [Hz]")
    cell_radius_r: float = Field(gt=0, description="Cell radius R [m]")
    bandwidth_fraction: float = Field(default=1.0, gt=0, le=1, description="Share of B in use")
    seed: Optional[int] = Field(default=None, description="Placement seed, if generated")

    @field_validator('users')
    @classmethod
    def _unique_ids(cls, users):
        if not users:
            raise ValueError("scenario needs at least one user")
        ids = [u.id for u in users]
        if len(set(ids)) != len(ids):
            raise ValueError("user ids must be unique")
        return users

    @model_validator(mode='after')
    def _equal_bandwidth_split(self):
        n = len(self.users)
        uplink = (self.bandwidth_fraction * self.total_uplink_bandwidth_b) / n
        downlink = self.total_downlink_bandwidth_brx / n
        for u in self.users:
            if not np.isclose(u.link.uplink_bandwidth_bi, uplink, rtol=1e-12, atol=0.0):
                raise ValueError(
                    f"user {u.id}: uplink share {u.link.uplink_bandwidth_bi} Hz != fraction*B/N = {uplink} Hz"
                )
            if not np.isclose(u.link.downlink_bandwidth_brx, downlink, rtol=1e-12, atol=0.0):
                raise ValueError(
                    f"user {u.id}: downlink share {u.link.downlink_bandwidth_brx} Hz != Brx/N = {downlink} Hz"
                )
        return self

    @property
    def n_users(self) -> int:
        return len(self.users)

    def with_delay_budget(self, t_max: float) -> 'Scenario':
        """Same cell and placement under another delay budget"""
        if t_max <= 0:
            raise ValueError(f"delay budget must be positive, got {t_max}")
        return self.model_copy(update={'delay_budget_tmax': float(t_max)})


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"offloading share must lie in [0, 1], got {alpha}")
    return alpha


# Data model

def uplink_bits(data: DataProfile) -> float:
    """D_i = L * M * S"""
    return float(data.sensors_l * data.elements_m * data.bits_per_element_s)


def downlink_bits(data: DataProfile) -> float:
    """D_rx,i = L * S_rx"""
    return float(data.sensors_l * data.result_bits_per_sensor_srx)


def complexity(data: DataProfile) -> float:
    return float(data.elements_m) ** data.complexity_exponent


def _device_cycles(data: DataProfile, compute: ComputeProfile) -> float:
    return data.sensors_l * compute.cycles_per_element_device_eta * complexity(data)


def local_compute_load(u: UserDevice) -> float:
    """C_u,i = L * eta_i * f(M)"""
    return _device_cycles(u.data, u.compute)


def server_compute_load(u: UserDevice) -> float:
    """C_serv,i = L * eta_s * f(M)"""
    return u.data.sensors_l * u.compute.cycles_per_element_server_etas * complexity(u.data)


def gamma(u: UserDevice, s: CloudServer) -> float:
    """Server workload over server capacity, in seconds"""
    return server_compute_load(u) / s.capacity_cs


# Delay model

def comm_delay_coeff(u: UserDevice) -> float:
    """k_i: end-to-end communication time at alpha = 1"""
    link = u.link
    return (uplink_bits(u.data) / (link.uplink_bandwidth_bi * link.uplink_spectral_eff_ri)
            + downlink_bits(u.data) / (link.downlink_bandwidth_brx * link.downlink_spectral_eff_rrx))


def transmit_time(u: UserDevice, alpha: float) -> float:
    _check_alpha(alpha)
    return alpha * uplink_bits(u.data) / (u.link.uplink_bandwidth_bi * u.link.uplink_spectral_eff_ri)


def receive_time(u: UserDevice, alpha: float) -> float:
    _check_alpha(alpha)
    return alpha * downlink_bits(u.data) / (u.link.downlink_bandwidth_brx * u.link.downlink_spectral_eff_rrx)


def execution_time(u: UserDevice, s: CloudServer, alpha: float, rho: float) -> float:
    _check_alpha(alpha)
    if alpha == 0.0:
        return 0.0
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"user {u.id} offloads alpha={alpha} but holds server share rho={rho}")
    return alpha * server_compute_load(u) / (rho * s.capacity_cs)


# Energy model

def transmit_energy_factor(link: RadioLink) -> float:
    """(2^R - 1)/G * (d/d0)^beta * N0, joules per (bit / spectral efficiency)"""
    return ((2.0 ** link.uplink_spectral_eff_ri - 1.0) / link.attenuation_g
            * (link.distance_d / link.reference_distance_d0) ** link.pathloss_exponent_beta
            * link.noise_psd_n0)


def energy_local(u: UserDevice, alpha: float) -> float:
    _check_alpha(alpha)
    return (1.0 - alpha) * u.compute.energy_per_cycle_eps * local_compute_load(u)


def energy_transmit(u: UserDevice, alpha: float) -> float:
    # B_i cancels between the noise power and the transmission time
    _check_alpha(alpha)
    return transmit_energy_factor(u.link) * alpha * uplink_bits(u.data) / u.link.uplink_spectral_eff_ri


def energy_total(u: UserDevice, alpha: float) -> float:
    return energy_local(u, alpha) + energy_transmit(u, alpha)


def energy_slope_transmit(u: UserDevice) -> float:
    return transmit_energy_factor(u.link) * uplink_bits(u.data) / u.link.uplink_spectral_eff_ri


def energy_slope_local(u: UserDevice) -> float:
    return -u.compute.energy_per_cycle_eps * local_compute_load(u)


def energy_saving_rate(u: UserDevice) -> float:
    """-E'_tr - E'_u: energy saved per unit of offloading share"""
    return -energy_slope_transmit(u) - energy_slope_local(u)


def gate_threshold_distance(u_template: UserDevice) -> float:
    """Distance d* at which transmit and local energy slopes balance"""
    link = u_template.link
    local = u_template.compute.energy_per_cycle_eps * local_compute_load(u_template)
    per_path_loss = ((2.0 ** link.uplink_spectral_eff_ri - 1.0) / link.attenuation_g
                     * link.noise_psd_n0 * uplink_bits(u_template.data) / link.uplink_spectral_eff_ri)
    return link.reference_distance_d0 * (local / per_path_loss) ** (1.0 / link.pathloss_exponent_beta)


def calibrated_attenuation(data: DataProfile, compute: ComputeProfile, spectral_eff: float,
                           noise_psd: float, reference_distance: float, pathloss_exponent: float,
                           threshold_distance: float) -> float:
    """G that places the energy gate boundary at threshold_distance"""
    local = compute.energy_per_cycle_eps * _device_cycles(data, compute)
    return ((threshold_distance / reference_distance) ** pathloss_exponent
            * (2.0 ** spectral_eff - 1.0) * noise_psd * uplink_bits(data)
            / (local * spectral_eff))


class ScenarioArrays(NamedTuple):
    """Per-user quantities of a scenario as aligned numpy vectors"""
    ids: np.ndarray
    distance: np.ndarray
    k: np.ndarray
    gamma: np.ndarray
    saving: np.ndarray       # -E'_tr - E'_u
    slope_tr: np.ndarray
    slope_u: np.ndarray
    data_bits: np.ndarray
    t_max: float


def scenario_arrays(scenario: Scenario) -> ScenarioArrays:
    users = scenario.users
    slope_tr = np.array([energy_slope_transmit(u) for u in users])
    slope_u = np.array([energy_slope_local(u) for u in users])
    return ScenarioArrays(
        ids=np.array([u.id for u in users]),
        distance=np.array([u.link.distance_d for u in users]),
        k=np.array([comm_delay_coeff(u) for u in users]),
        gamma=np.array([gamma(u, scenario.server) for u in users]),
        saving=-slope_tr - slope_u,
        slope_tr=slope_tr,
        slope_u=slope_u,
        data_bits=np.array([uplink_bits(u.data) for u in users]),
        t_max=scenario.delay_budget_tmax,
    )
