#!/usr/bin/env python3
"""
Edge offloading optimizer command line

Usage:
    python app.py gen [--config cell.cfg] [--seed 7] [--out scenario.cfg]
    python app.py solve scenario.cfg [--admission refined|greedy] [--out solution.csv]
    python app.py sweep cell.cfg --tmax 1ms:20ms:1ms --bw 0.2,0.4,0.6,0.8,1.0 [--out sweep.csv]
    python app.py cutoff cell.cfg --bw 0.2,0.4,0.6,0.8,1.0 --n 20,40,60,80,100 [--out cutoff.csv]
    python app.py verify scenario.cfg [--grid-step 0.005] [--solution solution.csv] [--report report.json]

Exit codes: 0 success, 2 input error, 3 solver failure, 4 verification failure.
"""
import argparse
import io
import json
import logging
import sys
from typing import List, Optional

from config import Config
from middleware import VerificationFailed, cli_command
from services import (
    GridSpec,
    ScenarioConfig,
    SolverOptions,
    bandwidth_tradeoff,
    generate,
    kkt_residuals,
    solve,
    sweep_tmax,
)
from services.oracle import compare_solution
from utils import (
    ScenarioFormatError,
    parse_config,
    parse_quantity,
    read_solution,
    serialize_scenario,
    write_cutoff,
    write_solution,
    write_sweep,
)

# Configure logging
logging.basicConfig(
    level=Config.LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)


def _read_text(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def _emit(text: str, out_path: Optional[str]) -> None:
    """Write to out_path, or stdout when no path is given"""
    if out_path:
        with open(out_path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {out_path}")
    else:
        sys.stdout.write(text)


def _load_config(path: Optional[str]) -> ScenarioConfig:
    if not path:
        return ScenarioConfig()
    return parse_config(_read_text(path), source=path)


def _time_range(text: str) -> List[float]:
    """'1ms:20ms:1ms' -> [1e-3, 2e-3, ..., 20e-3]"""
    parts = text.split(':')
    if len(parts) != 3:
        raise ValueError(f"expected from:to:step, got {text!r}")
    start, end, step = (parse_quantity(p, 'time') for p in parts)
    if step <= 0 or start <= 0 or end < start:
        raise ValueError(f"empty or invalid delay range {text!r}")
    count = int((end - start) / step + 1e-9) + 1
    return [start + i * step for i in range(count)]


def _fractions(text: str) -> List[float]:
    values = [float(v) for v in text.split(',') if v.strip()]
    if not values or any(not 0 < v <= 1 for v in values):
        raise ValueError(f"bandwidth fractions must lie in (0, 1], got {text!r}")
    return values


def _counts(text: str) -> List[int]:
    values = [int(v) for v in text.split(',') if v.strip()]
    if not values or any(v < 1 for v in values):
        raise ValueError(f"device counts must be positive, got {text!r}")
    return values


@cli_command
def cmd_gen(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = config.with_updates(seed=args.seed)
    scenario = generate(config)
    _emit(serialize_scenario(scenario), args.out)
    return 0


@cli_command
def cmd_solve(args) -> int:
    scenario = generate(_load_config(args.scenario))
    solution = solve(scenario, SolverOptions(admission=args.admission))
    out = io.StringIO()
    write_solution(scenario, solution, out)
    _emit(out.getvalue(), args.out)
    return 0


@cli_command
def cmd_sweep(args) -> int:
    config = _load_config(args.scenario)
    t_values = _time_range(args.tmax)
    rows = []
    for fraction in _fractions(args.bw):
        rows.extend(sweep_tmax(config.with_updates(bandwidth_fraction=fraction), t_values, workers=args.workers))
    out = io.StringIO()
    write_sweep(rows, out)
    _emit(out.getvalue(), args.out)
    return 0


@cli_command
def cmd_cutoff(args) -> int:
    config = _load_config(args.config)
    rows = bandwidth_tradeoff(
        config,
        _fractions(args.bw),
        _counts(args.n),
        t_start=parse_quantity(args.tstart, 'time'),
        t_end=parse_quantity(args.tend, 'time'),
        step=parse_quantity(args.step, 'time'),
        slope_tol=args.slope_tol,
        workers=args.workers,
    )
    out = io.StringIO()
    write_cutoff(rows, out)
    _emit(out.getvalue(), args.out)
    return 0


@cli_command
def cmd_verify(args) -> int:
    scenario = generate(_load_config(args.scenario))
    opts = SolverOptions()
    if args.solution:
        solution = read_solution(_read_text(args.solution), source=args.solution)
        ids = [u.id for u in scenario.users]
        if solution.user_ids != ids:
            raise ScenarioFormatError(f"solution lists users {solution.user_ids}, scenario has {ids}",
                                      None, args.solution)
    else:
        solution = solve(scenario, opts)

    failures = []
    kkt = kkt_residuals(scenario, solution, opts)
    if not kkt.passes():
        failures.append(f"KKT residuals out of bounds (max {kkt.max_abs_residual:.3g})")

    spec = GridSpec() if args.grid_step is None else GridSpec(step=args.grid_step)
    report = {'mode': 'kkt-only', 'kkt_passes': kkt.passes(), 'kkt': kkt.model_dump()}
    if scenario.n_users <= spec.max_users:
        comparison = compare_solution(scenario, solution, spec, opts)
        report['mode'] = 'grid+kkt'
        report['oracle'] = comparison.model_dump()
        if not comparison.within_bound:
            failures.append(f"energy gap {comparison.energy_gap:.3g} J exceeds bound {comparison.gap_bound:.3g} J")
        if scenario.n_users == 1 and comparison.max_alpha_deviation > 2 * spec.step:
            failures.append(f"share deviation {comparison.max_alpha_deviation:.3g} exceeds {2 * spec.step:.3g}")
    else:
        logger.warning(f"{scenario.n_users} users exceed the grid limit of {spec.max_users}; KKT check only")

    report['passes'] = not failures
    _emit(json.dumps(report, indent=2) + "\n", args.report)
    if failures:
        raise VerificationFailed("; ".join(failures))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Delay-constrained energy-minimal edge offloading')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help='Generate a scenario file')
    gen.add_argument('--config', help='Cell config file (defaults to the reference setup)')
    gen.add_argument('--seed', type=int, help='Placement seed override')
    gen.add_argument('--out', help='Output path (default: stdout)')
    gen.set_defaults(handler=cmd_gen)

    solve_p = sub.add_parser('solve', help='Solve one scenario')
    solve_p.add_argument('scenario', help='Scenario or config file')
    solve_p.add_argument('--admission', choices=['refined', 'greedy'], default='refined')
    solve_p.add_argument('--out', help='Output path (default: stdout)')
    solve_p.set_defaults(handler=cmd_solve)

    sweep = sub.add_parser('sweep', help='Sweep the delay budget for several bandwidth fractions')
    sweep.add_argument('scenario', help='Scenario or config file')
    sweep.add_argument('--tmax', required=True, help='from:to:step, e.g. 1ms:20ms:1ms')
    sweep.add_argument('--bw', default='1.0', help='Comma-separated bandwidth fractions')
    sweep.add_argument('--workers', type=int, default=Config.THREADS)
    sweep.add_argument('--out', help='Output path (default: stdout)')
    sweep.set_defaults(handler=cmd_sweep)

    cutoff = sub.add_parser('cutoff', help='Cut-off delay for each (bandwidth fraction, N)')
    cutoff.add_argument('config', help='Cell config file')
    cutoff.add_argument('--bw', required=True, help='Comma-separated bandwidth fractions')
    cutoff.add_argument('--n', required=True, help='Comma-separated device counts')
    cutoff.add_argument('--tstart', default='0.05ms')
    cutoff.add_argument('--tend', default='30ms')
    cutoff.add_argument('--step', default='0.05ms')
    cutoff.add_argument('--slope-tol', type=float, default=None, help='Flatness threshold [1/s]')
    cutoff.add_argument('--workers', type=int, default=Config.THREADS)
    cutoff.add_argument('--out', help='Output path (default: stdout)')
    cutoff.set_defaults(handler=cmd_cutoff)

    verify = sub.add_parser('verify', help='Check a solution against KKT conditions and the grid oracle')
    verify.add_argument('scenario', help='Scenario or config file')
    verify.add_argument('--grid-step', type=float, default=None)
    verify.add_argument('--solution', help='Solution CSV written by solve (default: solve afresh)')
    verify.add_argument('--report', help='Report path (default: stdout)')
    verify.set_defaults(handler=cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
