"""
Delay-constrained energy-minimal offloading.

Closed-form offloading share per device, the admission multiplier bounds,
cloud share allocation, and the admission loop that drives the server load
back under capacity. KKT residuals are exposed for verification.
"""
import logging
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq

from config import Config
from .edge_model import (
    CloudServer,
    Scenario,
    ScenarioArrays,
    UserDevice,
    comm_delay_coeff,
    energy_saving_rate,
    gamma,
    scenario_arrays,
)

logger = logging.getLogger(__name__)


class InfeasibleError(ValueError):
    """An allocation leaves a device no execution budget or exceeds capacity"""


class SolverError(RuntimeError):
    """Admission loop could not bring the server load under capacity"""

    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.state = state or {}


class LoadStatus(str, Enum):
    UNDERLOADED = 'Underloaded'
    FULLY_LOADED = 'FullyLoaded'
    OVERLOADED = 'Overloaded'


class SolverOptions(BaseModel):
    """Numerical knobs of the admission algorithm"""
    model_config = ConfigDict(frozen=True)

    load_tolerance: float = Field(default_factory=lambda: Config.LOAD_TOLERANCE, gt=0)
    execution_margin_delta: float = Field(
        default_factory=lambda: Config.EXECUTION_MARGIN, ge=0, lt=1,
        description="Share of T_max always left for server execution"
    )
    max_drop_iterations: Optional[int] = Field(
        default=None, ge=1, description="Candidate steps allowed; None means N"
    )
    admission: Literal['refined', 'greedy'] = Field(
        default='refined',
        description="'refined' solves the capacity root inside the candidate bracket; "
                    "'greedy' only drops whole devices at candidate multipliers"
    )


class OffloadSolution(BaseModel):
    """Offloading decision with multipliers and server shares"""
    model_config = ConfigDict(frozen=True)

    user_ids: List[int]
    alpha: List[float]
    nu: float = Field(ge=0)
    psi: List[float]
    rho: List[float]
    status: LoadStatus
    dropped: List[int] = Field(default_factory=list, description="Ids pushed out by capacity")
    server_load: float
    candidate_steps: int = 0


class KktReport(BaseModel):
    """Residuals of the KKT system at a candidate solution"""
    stationarity_residual: List[float]
    primal_feasibility: float = Field(description="1 - server load; negative means over capacity")
    nu_nonnegative: bool
    psi_nonnegative: List[bool]
    capacity_slackness: float = Field(description="nu * (server load - 1)")
    bound_slackness: List[float] = Field(description="psi_i * alpha_i")
    upper_bound_ok: List[bool]
    max_abs_residual: float

    def passes(self, stationarity_tol: float = 1e-8, feasibility_tol: float = 1e-9) -> bool:
        return (
            self.primal_feasibility >= -feasibility_tol
            and self.nu_nonnegative
            and all(self.psi_nonnegative)
            and all(p == 0.0 for p in self.bound_slackness)
            and abs(self.capacity_slackness) <= feasibility_tol
            and all(self.upper_bound_ok)
            and self.max_abs_residual <= stationarity_tol
        )


# Single-device closed forms

def energy_gate(u: UserDevice) -> bool:
    """True when offloading lowers the device energy at the margin"""
    return energy_saving_rate(u) > 0.0


def alpha_closed_form(u: UserDevice, s: CloudServer, t_max: float, nu: float,
                      opts: Optional[SolverOptions] = None) -> float:
    if not energy_gate(u):
        raise ValueError(f"user {u.id} fails the energy gate; its share is 0")
    if t_max <= 0 or nu < 0:
        raise ValueError(f"need t_max > 0 and nu >= 0, got t_max={t_max}, nu={nu}")
    opts = opts or SolverOptions()
    k = comm_delay_coeff(u)
    root = np.sqrt(nu * gamma(u, s) * t_max / energy_saving_rate(u))
    alpha = min(1.0, max(t_max - root, 0.0) / k)
    return min(alpha, (1.0 - opts.execution_margin_delta) * t_max / k)


def nu_hat(u: UserDevice, s: CloudServer, t_max: float) -> float:
    """Multiplier at which the unclipped share of u reaches exactly 1"""
    if not energy_gate(u):
        raise ValueError(f"user {u.id} fails the energy gate")
    g = gamma(u, s)
    if g <= 0:
        raise ValueError(f"user {u.id} has no server workload; its multiplier is unbounded")
    slack = max(t_max - comm_delay_coeff(u), 0.0)
    return slack ** 2 * energy_saving_rate(u) / (g * t_max)


def nu_lower_bound(scenario: Scenario) -> float:
    """Smallest nu_hat among devices that pass the energy gate"""
    values = [nu_hat(u, scenario.server, scenario.delay_budget_tmax)
              for u in scenario.users if energy_gate(u)]
    if not values:
        raise ValueError("no device passes the energy gate; there are no offloading candidates")
    return min(values)


# Vectorised model of the whole cell

def _upper_bounds(arr: ScenarioArrays, delta: float) -> np.ndarray:
    return np.minimum(1.0, (1.0 - delta) * arr.t_max / arr.k)


def _alpha_at(arr: ScenarioArrays, nu: float, active: np.ndarray, delta: float) -> np.ndarray:
    alpha = np.zeros_like(arr.k)
    if not active.any():
        return alpha
    t = arr.t_max
    root = np.sqrt(nu * arr.gamma[active] * t / arr.saving[active])
    share = np.minimum(1.0, np.maximum(t - root, 0.0) / arr.k[active])
    alpha[active] = np.minimum(share, (1.0 - delta) * t / arr.k[active])
    return alpha


def _load_terms(arr: ScenarioArrays, alpha: np.ndarray) -> np.ndarray:
    """Per-device capacity share; inf where the execution budget is gone"""
    terms = np.zeros_like(alpha)
    on = alpha > 0
    budget = arr.t_max - alpha[on] * arr.k[on]
    with np.errstate(divide='ignore'):
        terms[on] = np.where(budget > 0, alpha[on] * arr.gamma[on] / np.where(budget > 0, budget, 1.0), np.inf)
    return terms


def _nu_hats(arr: ScenarioArrays, gated: np.ndarray) -> np.ndarray:
    values = np.zeros_like(arr.k)
    slack = np.maximum(arr.t_max - arr.k[gated], 0.0)
    values[gated] = slack ** 2 * arr.saving[gated] / (arr.gamma[gated] * arr.t_max)
    return values


def server_load(scenario: Scenario, alpha) -> float:
    """Sum of alpha_i gamma_i / (T_max - alpha_i k_i)"""
    arr = scenario_arrays(scenario)
    alpha = _as_alpha(arr, alpha)
    terms = _load_terms(arr, alpha)
    if not np.all(np.isfinite(terms)):
        bad = arr.ids[~np.isfinite(terms)].tolist()
        raise InfeasibleError(f"users {bad} have no execution budget left within T_max")
    return float(terms.sum())


def allocate_rho(scenario: Scenario, alpha, opts: Optional[SolverOptions] = None) -> List[float]:
    """Cloud shares that let every device finish exactly at T_max"""
    opts = opts or SolverOptions()
    arr = scenario_arrays(scenario)
    alpha = _as_alpha(arr, alpha)
    rho = _load_terms(arr, alpha)
    if not np.all(np.isfinite(rho)):
        bad = arr.ids[~np.isfinite(rho)].tolist()
        raise InfeasibleError(f"users {bad} have no execution budget left within T_max")
    if rho.sum() > 1.0 + opts.load_tolerance:
        raise InfeasibleError(f"server load {rho.sum():.6g} exceeds capacity")
    return rho.tolist()


def _as_alpha(arr: ScenarioArrays, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != arr.k.shape:
        raise ValueError(f"expected {arr.k.size} shares, got {alpha.size}")
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("offloading shares must lie in [0, 1]")
    return alpha


# Admission

def solve(scenario: Scenario, opts: Optional[SolverOptions] = None) -> OffloadSolution:
    """
    Energy-minimal offloading under the shared delay budget.

    Devices failing the energy gate keep everything local. Gated devices
    start from the nu = 0 closed form; if that overloads the server, the
    candidate multipliers nu_hat are visited in ascending order (ties: the
    farther device first, then the smaller id).

    Args:
        scenario: Cell, devices and delay budget
        opts: Solver options; 'refined' admission solves the capacity
            root inside the bracket found by the candidate walk, 'greedy'
            drops the device attaining each candidate until the load fits

    Returns:
        OffloadSolution with shares, multipliers and server shares
    """
    opts = opts or SolverOptions()
    arr = scenario_arrays(scenario)
    delta = opts.execution_margin_delta
    tol = opts.load_tolerance
    gated = arr.saving > 0
    logger.info(f"Energy gate: {int(gated.sum())}/{arr.k.size} devices may offload")

    nu = 0.0
    steps = 0
    alpha = _alpha_at(arr, nu, gated, delta)
    load = float(_load_terms(arr, alpha).sum())
    logger.debug(f"Server load at nu=0: {load:.6g}")

    if load <= 1.0 + tol:
        # a load inside the tolerance band already fills the server
        status = LoadStatus.UNDERLOADED if load < 1.0 else LoadStatus.FULLY_LOADED
        dropped: List[int] = []
    else:
        candidates = _candidate_order(arr, gated)
        if opts.admission == 'greedy':
            nu, alpha, dropped, steps = _greedy_admission(arr, gated, candidates, opts, len(arr.k))
        else:
            nu, alpha, steps = _refined_admission(arr, gated, candidates, opts, len(arr.k))
            dropped = arr.ids[gated & (alpha == 0.0)].tolist()
        load = float(_load_terms(arr, alpha).sum())
        status = LoadStatus.OVERLOADED if dropped else LoadStatus.FULLY_LOADED

    psi = np.where(alpha == 0.0, np.maximum(arr.slope_tr + arr.slope_u + nu * arr.gamma / arr.t_max, 0.0), 0.0)
    rho = _load_terms(arr, alpha)
    logger.info(f"Solved: status={status.value}, nu={nu:.6g}, load={load:.6g}, dropped={len(dropped)}")

    return OffloadSolution(
        user_ids=arr.ids.tolist(),
        alpha=alpha.tolist(),
        nu=nu,
        psi=psi.tolist(),
        rho=rho.tolist(),
        status=status,
        dropped=sorted(dropped),
        server_load=load,
        candidate_steps=steps,
    )


def _candidate_order(arr: ScenarioArrays, gated: np.ndarray) -> np.ndarray:
    """Indices of positive candidate multipliers, ascending with tie-breaks"""
    hats = _nu_hats(arr, gated)
    idx = np.flatnonzero(gated & (hats > 0))
    order = np.lexsort((arr.ids[idx], -arr.distance[idx], hats[idx]))
    return idx[order]


def _greedy_admission(arr, gated, candidates, opts, n_users):
    limit = opts.max_drop_iterations or n_users
    hats = _nu_hats(arr, gated)
    active = gated.copy()
    dropped = []
    for steps, j in enumerate(candidates, start=1):
        if steps > limit:
            raise SolverError("drop iteration limit exceeded",
                              {'nu': float(hats[j]), 'dropped': dropped, 'steps': steps})
        nu = float(hats[j])
        active[j] = False
        dropped.append(int(arr.ids[j]))
        alpha = _alpha_at(arr, nu, active, opts.execution_margin_delta)
        load = float(_load_terms(arr, alpha).sum())
        logger.debug(f"Dropped user {arr.ids[j]} at nu={nu:.6g}, load now {load:.6g}")
        if load <= 1.0 + opts.load_tolerance:
            return nu, alpha, dropped, steps
    raise SolverError("candidate multipliers exhausted while the server is still overloaded",
                      {'dropped': dropped, 'candidates': int(len(candidates))})


def _refined_admission(arr, gated, candidates, opts, n_users):
    limit = opts.max_drop_iterations or n_users
    delta = opts.execution_margin_delta
    tol = opts.load_tolerance
    hats = _nu_hats(arr, gated)

    def capacity_gap(nu):
        gap = _load_terms(arr, _alpha_at(arr, nu, gated, delta)).sum() - 1.0
        return gap if np.isfinite(gap) else np.finfo(float).max

    lo, hi, steps = 0.0, None, 0
    for j in candidates:
        steps += 1
        if steps > limit:
            raise SolverError("drop iteration limit exceeded", {'nu': lo, 'steps': steps})
        if capacity_gap(hats[j]) <= tol:
            hi = float(hats[j])
            break
        lo = float(hats[j])
    if hi is None:
        # every gated share reaches 0 once nu >= saving * T / gamma
        hi = float(np.max(arr.saving[gated] * arr.t_max / arr.gamma[gated]))

    if capacity_gap(hi) > 0.0:
        nu = hi
    else:
        nu = brentq(capacity_gap, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(64):
        if capacity_gap(nu) <= tol:
            break
        nu = 0.5 * (nu + hi)
    else:
        raise SolverError("capacity root did not converge", {'nu': nu, 'bracket': (lo, hi)})
    logger.debug(f"Capacity root nu={nu:.6g} in bracket [{lo:.6g}, {hi:.6g}] after {steps} candidates")
    return float(nu), _alpha_at(arr, nu, gated, delta), steps


# Verification

def kkt_residuals(scenario: Scenario, sol: OffloadSolution,
                  opts: Optional[SolverOptions] = None) -> KktReport:
    """Evaluate stationarity, feasibility and slackness at sol; never raises on bad values"""
    opts = opts or SolverOptions()
    arr = scenario_arrays(scenario)
    alpha = np.asarray(sol.alpha, dtype=float)
    psi = np.asarray(sol.psi, dtype=float)
    nu = float(sol.nu)
    t = arr.t_max

    ub = _upper_bounds(arr, opts.execution_margin_delta)
    at_zero = alpha <= 0.0
    at_upper = alpha >= ub * (1.0 - 1e-9)
    interior = ~at_zero & ~at_upper

    budget = t - alpha * arr.k
    with np.errstate(divide='ignore', invalid='ignore'):
        pull = np.where(budget > 0, nu * arr.gamma * t / np.where(budget > 0, budget, 1.0) ** 2, np.inf)
    derivative = arr.slope_tr + arr.slope_u + pull

    residual = np.zeros_like(alpha)
    residual[interior] = derivative[interior]
    residual[at_zero] = arr.slope_tr[at_zero] + arr.slope_u[at_zero] + nu * arr.gamma[at_zero] / t - psi[at_zero]
    # at the upper bound the bound's multiplier -derivative must be non-negative
    upper_ok = ~at_upper | (derivative <= 1e-8)

    terms = _load_terms(arr, np.clip(alpha, 0.0, 1.0))
    load = float(terms.sum())
    slack = 1.0 - load if np.isfinite(load) else -np.finfo(float).max
    capacity = nu * (load - 1.0) if np.isfinite(load) else np.finfo(float).max
    products = psi * alpha
    residual = np.where(np.isfinite(residual), residual, np.finfo(float).max)

    return KktReport(
        stationarity_residual=residual.tolist(),
        primal_feasibility=slack,
        nu_nonnegative=nu >= 0.0,
        psi_nonnegative=(psi >= 0.0).tolist(),
        capacity_slackness=capacity,
        bound_slackness=products.tolist(),
        upper_bound_ok=upper_ok.tolist(),
        max_abs_residual=float(max(np.max(np.abs(residual)), np.max(np.abs(products)))),
    )
