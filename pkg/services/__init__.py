from .edge_model import CloudServer, ComputeProfile, DataProfile, RadioLink, Scenario, UserDevice
from .optimizer import (
    InfeasibleError,
    KktReport,
    LoadStatus,
    OffloadSolution,
    SolverError,
    SolverOptions,
    allocate_rho,
    kkt_residuals,
    server_load,
    solve,
)
from .oracle import GridSpec, OracleComparison, OracleError, compare, continuous_dual_search, grid_search, hessian_check
from .scenario import ScenarioConfig, generate, place_users
from .metrics import bandwidth_tradeoff, cutoff_delay, evaluate, sweep_tmax

__all__ = [
    'CloudServer', 'ComputeProfile', 'DataProfile', 'RadioLink', 'Scenario', 'UserDevice',
    'InfeasibleError', 'KktReport', 'LoadStatus', 'OffloadSolution', 'SolverError', 'SolverOptions',
    'allocate_rho', 'kkt_residuals', 'server_load', 'solve',
    'GridSpec', 'OracleComparison', 'OracleError', 'compare', 'continuous_dual_search', 'grid_search',
    'hessian_check',
    'ScenarioConfig', 'generate', 'place_users',
    'bandwidth_tradeoff', 'cutoff_delay', 'evaluate', 'sweep_tmax',
]
