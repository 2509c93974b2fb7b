"""
CSV output for sweeps, cut-off tables and single solutions.
"""
import csv
import io
import logging
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

import numpy as np

from services.edge_model import Scenario, execution_time, receive_time, transmit_time
from services.metrics import MetricsRow, TradeoffRow, baseline_energy, offloading_percentage, optimized_energy
from services.optimizer import LoadStatus, OffloadSolution
from .config_parser import ScenarioFormatError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    't_max_s', 'bandwidth_fraction', 'n_users', 'seed', 'lambda',
    'e_sum_opt_j', 'e_sum_baseline_j', 'nu', 'status', 'n_dropped',
]
CUTOFF_COLUMNS = ['bandwidth_fraction', 'n_users', 't_c_s', 'saturated']
SOLUTION_COLUMNS = ['id', 'distance_m', 'alpha', 'rho', 'psi', 't_tr_s', 't_exe_s', 't_rx_s']
SUMMARY_MARKER = '# summary'


def _g(value: float) -> str:
    return f"{value:.12g}"


def write_sweep(rows: Iterable[MetricsRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([
            _g(row.t_max), _g(row.bandwidth_fraction), row.n_users,
            '' if row.seed is None else row.seed,
            _g(row.offloading_ratio), _g(row.e_sum_opt), _g(row.e_sum_baseline),
            _g(row.nu), row.status.value, row.n_dropped,
        ])


def write_cutoff(rows: Iterable[TradeoffRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(CUTOFF_COLUMNS)
    for row in rows:
        writer.writerow([_g(row.bandwidth_fraction), row.n_users, _g(row.t_c), str(row.saturated).lower()])


def write_solution(scenario: Scenario, solution: OffloadSolution, out: TextIO) -> None:
    """
    Per-device table followed by a key,value summary

    Floats are written with 17 significant digits so the file can be read
    back and verified without loss.
    """
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(SOLUTION_COLUMNS)
    t_max = scenario.delay_budget_tmax
    for u, a, rho, psi in zip(scenario.users, solution.alpha, solution.rho, solution.psi):
        writer.writerow([
            u.id, repr(u.link.distance_d), repr(a), repr(rho), repr(psi),
            repr(transmit_time(u, a)),
            repr(execution_time(u, scenario.server, a, rho)),
            repr(receive_time(u, a)),
        ])
    out.write(f"{SUMMARY_MARKER}\n")
    writer.writerow(['key', 'value'])
    writer.writerow(['t_max_s', repr(t_max)])
    writer.writerow(['nu', repr(solution.nu)])
    writer.writerow(['status', solution.status.value])
    writer.writerow(['dropped', ' '.join(str(i) for i in solution.dropped)])
    writer.writerow(['server_load', repr(solution.server_load)])
    writer.writerow(['lambda', repr(offloading_percentage(scenario, solution))])
    writer.writerow(['e_sum_opt_j', repr(optimized_energy(scenario, solution))])
    writer.writerow(['e_sum_baseline_j', repr(baseline_energy(scenario))])
    writer.writerow(['candidate_steps', solution.candidate_steps])


def read_solution(text: str, source: Optional[str] = None) -> OffloadSolution:
    """Parse the output of write_solution; raises ScenarioFormatError"""
    lines = text.splitlines()
    try:
        marker = lines.index(SUMMARY_MARKER)
    except ValueError:
        raise ScenarioFormatError(f"missing '{SUMMARY_MARKER}' line", None, source)

    table = list(csv.reader(io.StringIO("\n".join(lines[:marker]))))
    if not table or table[0] != SOLUTION_COLUMNS:
        raise ScenarioFormatError(f"expected header {','.join(SOLUTION_COLUMNS)}", 1, source)

    ids: List[int] = []
    alpha: List[float] = []
    rho: List[float] = []
    psi: List[float] = []
    for number, row in enumerate(table[1:], start=2):
        if len(row) != len(SOLUTION_COLUMNS):
            raise ScenarioFormatError(f"expected {len(SOLUTION_COLUMNS)} fields, got {len(row)}", number, source)
        try:
            ids.append(int(row[0]))
            alpha.append(float(row[2]))
            rho.append(float(row[3]))
            psi.append(float(row[4]))
        except ValueError as e:
            raise ScenarioFormatError(f"bad number: {e}", number, source)

    summary: Dict[str, Tuple[str, int]] = {}
    for number, row in enumerate(csv.reader(io.StringIO("\n".join(lines[marker + 1:]))), start=marker + 2):
        if not row or row == ['key', 'value']:
            continue
        if len(row) != 2:
            raise ScenarioFormatError("expected 'key,value'", number, source)
        summary[row[0]] = (row[1], number)

    for key in ('nu', 'status', 'server_load'):
        if key not in summary:
            raise ScenarioFormatError(f"summary lacks {key!r}", None, source)
    try:
        nu = float(summary['nu'][0])
        load = float(summary['server_load'][0])
        status = LoadStatus(summary['status'][0])
        dropped = [int(i) for i in summary.get('dropped', ('', 0))[0].split()]
        steps = int(summary.get('candidate_steps', ('0', 0))[0])
    except ValueError as e:
        raise ScenarioFormatError(f"bad summary value: {e}", None, source)
    if nu < 0 or not np.isfinite(nu):
        raise ScenarioFormatError("nu must be finite and non-negative", summary['nu'][1], source)

    return OffloadSolution(
        user_ids=ids, alpha=alpha, nu=nu, psi=psi, rho=rho,
        status=status, dropped=dropped, server_load=load, candidate_steps=steps,
    )
