"""
Performance metrics and parameter sweeps.

Offloading ratio (data-weighted mean share), optimized and all-local
energies, sweeps over the delay budget, and the cut-off delay beyond which
the offloading ratio stops growing.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import Config
from .edge_model import Scenario, energy_total, energy_local, uplink_bits
from .optimizer import LoadStatus, OffloadSolution, SolverOptions, solve
from .scenario import ScenarioConfig, generate

logger = logging.getLogger(__name__)


class MetricsRow(BaseModel):
    """One evaluated (T_max, bandwidth fraction, N) point"""
    model_config = ConfigDict(frozen=True)

    t_max: float
    bandwidth_fraction: float
    n_users: int
    seed: Optional[int] = None
    offloading_ratio: float = Field(ge=0, le=1)
    e_sum_opt: float
    e_sum_baseline: float
    nu: float
    status: LoadStatus
    n_dropped: int


class CutoffResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_c: float
    grid_step: float
    lambda_at_tc: float
    saturated: bool = Field(description="False when the ratio was still rising at t_end")


class TradeoffRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    bandwidth_fraction: float
    n_users: int
    t_c: float
    saturated: bool


def offloading_percentage(scenario: Scenario, solution: OffloadSolution) -> float:
    """Share of all sensor bits processed in the cloud"""
    bits = np.array([uplink_bits(u.data) for u in scenario.users])
    alpha = np.asarray(solution.alpha, dtype=float)
    return float(np.dot(alpha, bits) / bits.sum())


def baseline_energy(scenario: Scenario) -> float:
    """Energy when every device processes everything locally"""
    return float(sum(energy_local(u, 0.0) for u in scenario.users))


def optimized_energy(scenario: Scenario, solution: OffloadSolution) -> float:
    return float(sum(energy_total(u, a) for u, a in zip(scenario.users, solution.alpha)))


def evaluate(scenario: Scenario, opts: Optional[SolverOptions] = None) -> MetricsRow:
    solution = solve(scenario, opts)
    return MetricsRow(
        t_max=scenario.delay_budget_tmax,
        bandwidth_fraction=scenario.bandwidth_fraction,
        n_users=scenario.n_users,
        seed=scenario.seed,
        offloading_ratio=min(1.0, offloading_percentage(scenario, solution)),
        e_sum_opt=optimized_energy(scenario, solution),
        e_sum_baseline=baseline_energy(scenario),
        nu=solution.nu,
        status=solution.status,
        n_dropped=len(solution.dropped),
    )


def _check_increasing(t_values: Sequence[float]) -> List[float]:
    t_values = [float(t) for t in t_values]
    if not t_values:
        raise ValueError("need at least one delay budget")
    if t_values[0] <= 0 or any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("delay budgets must be positive and strictly increasing")
    return t_values


def sweep_tmax(config: ScenarioConfig, t_values: Sequence[float],
               opts: Optional[SolverOptions] = None,
               workers: Optional[int] = None) -> List[MetricsRow]:
    """
    Evaluate one placement under each delay budget

    Args:
        config: Cell parameters; the placement is drawn once from its seed
        t_values: Strictly increasing delay budgets [s]
        opts: Solver options
        workers: Thread cap; defaults to Config.THREADS

    Returns:
        One MetricsRow per delay budget, in input order
    """
    t_values = _check_increasing(t_values)
    scenario = generate(config)
    logger.info(f"Sweeping {len(t_values)} delay budgets (N={config.n_users}, "
                f"fraction={config.bandwidth_fraction}, seed={config.seed})")
    scenarios = [scenario.with_delay_budget(t) for t in t_values]
    if len(scenarios) == 1 or workers == 1:
        return [evaluate(s, opts) for s in scenarios]
    with ThreadPoolExecutor(max_workers=workers or Config.THREADS) as pool:
        return list(pool.map(lambda s: evaluate(s, opts), scenarios))


def delay_grid(t_start: float, t_end: float, step: float) -> np.ndarray:
    if not 0 < t_start < t_end or step <= 0:
        raise ValueError(f"need 0 < t_start < t_end and step > 0, got {t_start}, {t_end}, {step}")
    count = int(np.floor((t_end - t_start) / step + 1e-9)) + 1
    return t_start + step * np.arange(count)


def cutoff_delay(config: ScenarioConfig, t_start: float, t_end: float, step: float,
                 slope_tol: Optional[float] = None,
                 opts: Optional[SolverOptions] = None,
                 workers: Optional[int] = None) -> CutoffResult:
    """
    Smallest grid delay after which the offloading ratio stays flat

    The forward-difference slope of the ratio must be below slope_tol (per
    second) at that grid point and at every later one.
    """
    slope_tol = Config.CUTOFF_SLOPE_TOL if slope_tol is None else slope_tol
    grid = delay_grid(t_start, t_end, step)
    rows = sweep_tmax(config, grid, opts, workers)
    ratios = np.array([row.offloading_ratio for row in rows])
    rising = np.flatnonzero(np.diff(ratios) / step >= slope_tol)
    first_flat = 0 if rising.size == 0 else int(rising[-1]) + 1

    if grid.size < 2 or first_flat > grid.size - 2:
        logger.warning(f"Offloading ratio still rising at {t_end:.6g} s "
                       f"(N={config.n_users}, fraction={config.bandwidth_fraction})")
        return CutoffResult(t_c=t_end, grid_step=step, lambda_at_tc=float(ratios[-1]), saturated=False)
    return CutoffResult(
        t_c=float(grid[first_flat]),
        grid_step=step,
        lambda_at_tc=float(ratios[first_flat]),
        saturated=True,
    )


def bandwidth_tradeoff(config: ScenarioConfig, fractions: Sequence[float], n_values: Sequence[int],
                       t_start: float, t_end: float, step: float,
                       slope_tol: Optional[float] = None,
                       opts: Optional[SolverOptions] = None,
                       workers: Optional[int] = None) -> List[TradeoffRow]:
    """Cut-off delay for every (bandwidth fraction, N) pair, N-major order"""
    if not fractions or not n_values:
        raise ValueError("need at least one bandwidth fraction and one device count")
    cells = [(float(f), int(n)) for n in n_values for f in fractions]

    def run(cell):
        fraction, n = cell
        cell_config = config.with_updates(bandwidth_fraction=fraction, n_users=n, distances=None)
        result = cutoff_delay(cell_config, t_start, t_end, step, slope_tol, opts, workers=1)
        return TradeoffRow(bandwidth_fraction=fraction, n_users=n, t_c=result.t_c, saturated=result.saturated)

    with ThreadPoolExecutor(max_workers=workers or Config.THREADS) as pool:
        return list(pool.map(run, cells))
