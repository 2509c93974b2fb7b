"""
Independent checks of the optimizer on small cells.

Exhaustive grid search over the joint share space, a plain bisection on
the capacity multiplier, and a finite-difference convexity witness for the
Lagrangian.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import Config
from .edge_model import Scenario, ScenarioArrays, scenario_arrays
from .optimizer import (
    InfeasibleError,
    LoadStatus,
    OffloadSolution,
    SolverOptions,
    _alpha_at,
    _load_terms,
    _upper_bounds,
    solve,
)

logger = logging.getLogger(__name__)


class OracleError(ValueError):
    """Oracle cannot run on this input"""


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: float = Field(default_factory=lambda: Config.ORACLE_GRID_STEP, gt=0, le=0.5)
    max_users: int = Field(default_factory=lambda: Config.ORACLE_MAX_USERS, ge=1)


class OracleComparison(BaseModel):
    oracle_energy: float
    solver_energy: float
    energy_gap: float = Field(description="solver_energy - oracle_energy")
    gap_bound: float = Field(description="N * step * max_i |E'_tr,i + E'_u,i|")
    max_alpha_deviation: float = Field(description="Largest |alpha difference| where both are interior")
    oracle_feasible: bool
    oracle_alpha: List[float]
    solver_alpha: List[float]

    @property
    def within_bound(self) -> bool:
        return self.energy_gap <= self.gap_bound + 1e-15


def _grid_values(step: float) -> np.ndarray:
    count = int(np.floor(1.0 / step + 1e-9))
    values = step * np.arange(count + 1)
    if values[-1] < 1.0:
        values = np.append(values, 1.0)
    return np.minimum(values, 1.0)


def _per_user_tables(arr: ScenarioArrays, values: np.ndarray, delta: float):
    """Energy and capacity share of each device at each grid value"""
    baseline = -arr.slope_u
    energy = baseline[:, None] - arr.saving[:, None] * values[None, :]
    alpha = np.broadcast_to(values, (arr.k.size, values.size))
    budget = arr.t_max - alpha * arr.k[:, None]
    cap = ((1.0 - delta) * arr.t_max / arr.k)[:, None]
    with np.errstate(divide='ignore', invalid='ignore'):
        load = np.where((budget > 0) & (alpha <= cap), alpha * arr.gamma[:, None] / np.where(budget > 0, budget, 1.0), np.inf)
    load[:, 0] = 0.0
    return energy, load


def _best_in_slab(prefix, energy, load, values, limit, tie_tol):
    """Best feasible point with the given leading coordinates (last two, or one, free)"""
    n = energy.shape[0]
    free = min(n, 2)
    fixed = n - free
    e0 = sum(energy[i, prefix[i]] for i in range(fixed))
    g0 = sum(load[i, prefix[i]] for i in range(fixed))
    s0 = sum(values[prefix[i]] for i in range(fixed))
    if free == 1:
        e = e0 + energy[-1]
        g = g0 + load[-1]
        s = s0 + values
    else:
        e = e0 + energy[-2][:, None] + energy[-1][None, :]
        g = g0 + load[-2][:, None] + load[-1][None, :]
        s = s0 + values[:, None] + values[None, :]
    feasible = g <= limit
    if not feasible.any():
        return None
    e_min = e[feasible].min()
    ties = feasible & (e <= e_min + tie_tol)
    flat = int(np.argmax(np.where(ties, s, -np.inf)))
    idx = np.unravel_index(flat, e.shape)
    point = tuple(prefix) + tuple(int(i) for i in idx)
    return float(e[idx]), float(s[idx]), point


def grid_search(scenario: Scenario, spec: Optional[GridSpec] = None,
                opts: Optional[SolverOptions] = None,
                workers: Optional[int] = None) -> OffloadSolution:
    """
    Exhaustive minimum of the total energy over {0, step, ..., 1}^N

    Points leaving a device no execution budget beyond the solver's margin,
    or exceeding the server capacity, are infeasible. Ties go to the larger
    total share.
    """
    spec = spec or GridSpec()
    opts = opts or SolverOptions()
    n = scenario.n_users
    if n > spec.max_users:
        raise OracleError(f"grid search handles at most {spec.max_users} users, got {n}")

    arr = scenario_arrays(scenario)
    values = _grid_values(spec.step)
    energy, load = _per_user_tables(arr, values, opts.execution_margin_delta)
    limit = 1.0 + opts.load_tolerance
    tie_tol = 1e-12 * float(np.abs(energy).max())
    prefixes = list(itertools.product(range(values.size), repeat=max(n - 2, 0)))
    logger.info(f"Grid search over {values.size ** n} points ({len(prefixes)} slabs)")

    def run(prefix):
        return _best_in_slab(prefix, energy, load, values, limit, tie_tol)

    if len(prefixes) > 1:
        with ThreadPoolExecutor(max_workers=workers or Config.THREADS) as pool:
            results = list(pool.map(run, prefixes))
    else:
        results = [run(p) for p in prefixes]

    best = None
    for result in results:
        if result is None:
            continue
        if (best is None or result[0] < best[0] - tie_tol
                or (abs(result[0] - best[0]) <= tie_tol and result[1] > best[1])):
            best = result
    if best is None:
        raise OracleError("no feasible grid point")

    alpha = values[list(best[2])]
    rho = _load_terms(arr, alpha)
    gated = arr.saving > 0
    # the grid has no multiplier of its own; report the continuous one
    load_at_zero = capacity_load_at(scenario, 0.0, opts)
    if load_at_zero <= limit:
        nu = 0.0
        dropped: List[int] = []
        status = LoadStatus.UNDERLOADED if load_at_zero < 1.0 else LoadStatus.FULLY_LOADED
    else:
        nu = continuous_dual_search(scenario, opts=opts)
        dropped = arr.ids[gated & (alpha == 0.0)].tolist()
        status = LoadStatus.OVERLOADED if dropped else LoadStatus.FULLY_LOADED
    return OffloadSolution(
        user_ids=arr.ids.tolist(),
        alpha=alpha.tolist(),
        nu=nu,
        psi=[0.0] * n,
        rho=rho.tolist(),
        status=status,
        dropped=sorted(dropped),
        server_load=float(rho.sum()),
    )


def capacity_load_at(scenario: Scenario, nu: float, opts: Optional[SolverOptions] = None) -> float:
    """Server load when every gated device takes its closed-form share at nu"""
    opts = opts or SolverOptions()
    arr = scenario_arrays(scenario)
    alpha = _alpha_at(arr, nu, arr.saving > 0, opts.execution_margin_delta)
    return float(_load_terms(arr, alpha).sum())


def continuous_dual_search(scenario: Scenario, tol: float = 1e-12,
                           opts: Optional[SolverOptions] = None) -> float:
    """Bisection for the multiplier that loads the server exactly to capacity"""
    opts = opts or SolverOptions()
    arr = scenario_arrays(scenario)
    gated = arr.saving > 0
    if not gated.any() or capacity_load_at(scenario, 0.0, opts) <= 1.0:
        return 0.0

    lo = 0.0
    hi = float(np.max(arr.saving[gated] * arr.t_max / arr.gamma[gated]))
    if capacity_load_at(scenario, hi, opts) > 1.0:
        raise OracleError(f"load still above capacity at nu={hi:.6g}; interval does not bracket")

    mid = hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        load = capacity_load_at(scenario, mid, opts)
        if abs(load - 1.0) <= tol:
            return mid
        if load > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps * hi:
            break
    logger.warning(f"Bisection stopped at nu={mid:.6g} before reaching tolerance {tol}")
    return hi


# Convexity witness

def _lagrangian_change(arr: ScenarioArrays, alpha: np.ndarray, step: np.ndarray, nu: float) -> float:
    """L(alpha + step) - L(alpha); the linear energy part is differenced exactly"""
    moved = alpha + step
    before = alpha * arr.gamma / (arr.t_max - alpha * arr.k)
    after = moved * arr.gamma / (arr.t_max - moved * arr.k)
    return float(-np.sum(arr.saving * step) + nu * np.sum(after - before))


def _stencil_step(arr: ScenarioArrays, alpha: np.ndarray, h: float) -> float:
    # keep alpha +- h inside the execution budget
    return min(h, 0.25 * float(np.min((arr.t_max - alpha * arr.k) / arr.k)))


def hessian_diagonal(scenario: Scenario, alpha, nu: float) -> np.ndarray:
    """2 nu gamma_i T_max k_i (T_max - alpha_i k_i)^-3"""
    arr = scenario_arrays(scenario)
    alpha = _feasible_alpha(arr, alpha)
    return 2.0 * nu * arr.gamma * arr.t_max * arr.k / (arr.t_max - alpha * arr.k) ** 3


def finite_difference_hessian(scenario: Scenario, alpha, nu: float, h: float = 1e-5) -> np.ndarray:
    """Central-difference Hessian of the Lagrangian"""
    arr = scenario_arrays(scenario)
    alpha = _feasible_alpha(arr, alpha)
    h = _stencil_step(arr, alpha, h)
    n = alpha.size
    eye = np.eye(n) * h
    hess = np.zeros((n, n))
    for i in range(n):
        hess[i, i] = (_lagrangian_change(arr, alpha, eye[i], nu)
                      + _lagrangian_change(arr, alpha, -eye[i], nu)) / h ** 2
        for j in range(i + 1, n):
            hess[i, j] = hess[j, i] = (
                _lagrangian_change(arr, alpha, eye[i] + eye[j], nu)
                - _lagrangian_change(arr, alpha, eye[i] - eye[j], nu)
                - _lagrangian_change(arr, alpha, -eye[i] + eye[j], nu)
                + _lagrangian_change(arr, alpha, -eye[i] - eye[j], nu)
            ) / (4.0 * h ** 2)
    return hess


def hessian_check(scenario: Scenario, alpha, nu: float) -> bool:
    """Diagonal entries non-negative and cross-partials numerically zero"""
    arr = scenario_arrays(scenario)
    alpha = _feasible_alpha(arr, alpha)
    diagonal = hessian_diagonal(scenario, alpha, nu)
    if not np.all(np.isfinite(diagonal)) or np.any(diagonal < 0):
        return False
    if alpha.size < 2:
        return True
    h = _stencil_step(arr, alpha, 1e-5)
    off = finite_difference_hessian(scenario, alpha, nu, h)[~np.eye(alpha.size, dtype=bool)]
    terms = alpha * arr.gamma / (arr.t_max - alpha * arr.k)
    # cancellation noise of the four-point stencil
    noise = 64 * np.finfo(float).eps * (nu * np.sum(terms + arr.gamma) + h * np.sum(np.abs(arr.saving))) / h ** 2
    return bool(np.all(np.abs(off) <= 1e-6 * np.max(diagonal) + noise))


def _feasible_alpha(arr: ScenarioArrays, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != arr.k.shape or np.any(alpha < 0) or np.any(alpha > 1):
        raise InfeasibleError("shares must be one value in [0, 1] per device")
    if np.any(arr.t_max - alpha * arr.k <= 0):
        raise InfeasibleError("a device has no execution budget left within T_max")
    return alpha


def compare(scenario: Scenario, spec: Optional[GridSpec] = None,
            opts: Optional[SolverOptions] = None) -> OracleComparison:
    """Solver output against the exhaustive grid optimum"""
    spec = spec or GridSpec()
    opts = opts or SolverOptions()
    return compare_solution(scenario, solve(scenario, opts), spec, opts)


def compare_solution(scenario: Scenario, solution: OffloadSolution,
                     spec: Optional[GridSpec] = None,
                     opts: Optional[SolverOptions] = None) -> OracleComparison:
    spec = spec or GridSpec()
    opts = opts or SolverOptions()
    arr = scenario_arrays(scenario)
    oracle = grid_search(scenario, spec, opts)

    def total(alpha):
        return float(np.sum(-arr.slope_u - arr.saving * np.asarray(alpha)))

    solver_alpha = np.asarray(solution.alpha)
    oracle_alpha = np.asarray(oracle.alpha)
    ub = _upper_bounds(arr, opts.execution_margin_delta)
    both_interior = ((solver_alpha > 0) & (solver_alpha < ub)
                     & (oracle_alpha > 0) & (oracle_alpha < ub))
    deviation = np.abs(solver_alpha - oracle_alpha)[both_interior]

    oracle_energy = total(oracle_alpha)
    solver_energy = total(solver_alpha)
    return OracleComparison(
        oracle_energy=oracle_energy,
        solver_energy=solver_energy,
        energy_gap=solver_energy - oracle_energy,
        gap_bound=scenario.n_users * spec.step * float(np.max(np.abs(arr.saving))),
        max_alpha_deviation=float(deviation.max()) if deviation.size else 0.0,
        oracle_feasible=True,
        oracle_alpha=oracle_alpha.tolist(),
        solver_alpha=solver_alpha.tolist(),
    )
