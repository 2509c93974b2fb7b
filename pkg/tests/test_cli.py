"""
Command line: outputs, determinism and exit codes
"""
import csv
import io
import json

import pytest

import app
from utils.config_parser import serialize_config

OVERLOAD_CELL = (
    "n_users = 2\n"
    "bandwidth = 800 kHz\n"
    "downlink_bandwidth = 800 kHz\n"
    "server_capacity = 350 kHz\n"
    "t_max = 5 ms\n"
    "[distances]\n"
    "0 = 100\n"
    "1 = 300\n"
)


def _run(capsys, *argv):
    code = app.main(list(argv))
    return code, capsys.readouterr().out


class TestGen:
    def test_defaults_serialize_reference_cell(self, capsys):
        code, out = _run(capsys, 'gen')
        assert code == 0
        assert 'n_users = 50' in out
        assert '[distances]' in out

    def test_same_seed_gives_identical_files(self, tmp_path):
        first, second = tmp_path / 'a.cfg', tmp_path / 'b.cfg'
        assert app.main(['gen', '--seed', '7', '--out', str(first)]) == 0
        assert app.main(['gen', '--seed', '7', '--out', str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_seed_changes_placement(self, tmp_path):
        first, second = tmp_path / 'a.cfg', tmp_path / 'b.cfg'
        app.main(['gen', '--seed', '7', '--out', str(first)])
        app.main(['gen', '--seed', '8', '--out', str(second)])
        assert first.read_text() != second.read_text()

    def test_bad_key_is_input_error(self, write_config):
        assert app.main(['gen', '--config', write_config("warp = 9\n")]) == 2

    def test_missing_file_is_input_error(self, tmp_path):
        assert app.main(['gen', '--config', str(tmp_path / 'absent.cfg')]) == 2

    def test_unknown_command_is_input_error(self):
        assert app.main(['launch']) == 2


class TestSolve:
    def test_reference_cell_is_underloaded(self, capsys, write_config):
        code, out = _run(capsys, 'solve', write_config(""))
        assert code == 0
        table, summary = out.split('# summary\n')
        rows = list(csv.DictReader(io.StringIO(table)))
        assert len(rows) == 50
        values = dict(csv.reader(io.StringIO(summary)))
        assert values['status'] == 'Underloaded'
        assert float(values['nu']) == 0.0
        assert float(values['e_sum_baseline_j']) == pytest.approx(17.5e-3, rel=1e-12)

    def test_devices_finish_within_budget(self, capsys, write_config):
        code, out = _run(capsys, 'solve', write_config(OVERLOAD_CELL))
        assert code == 0
        table = out.split('# summary\n')[0]
        for row in csv.DictReader(io.StringIO(table)):
            total = float(row['t_tr_s']) + float(row['t_exe_s']) + float(row['t_rx_s'])
            assert total == pytest.approx(5e-3, rel=1e-9)

    def test_far_devices_keep_baseline_energy(self, capsys, write_config):
        path = write_config("n_users = 2\n[distances]\n0 = 600\n1 = 700\n")
        code, out = _run(capsys, 'solve', path)
        values = dict(csv.reader(io.StringIO(out.split('# summary\n')[1])))
        assert code == 0
        assert float(values['lambda']) == 0.0
        assert values['e_sum_opt_j'] == values['e_sum_baseline_j']

    def test_malformed_file_is_input_error(self, write_config):
        assert app.main(['solve', write_config("t_max = soon\n")]) == 2

    def test_greedy_without_candidates_is_solver_failure(self, write_config):
        path = write_config(OVERLOAD_CELL.replace("t_max = 5 ms", "t_max = 2 ms"))
        assert app.main(['solve', path, '--admission', 'greedy']) == 3


class TestSweep:
    def test_grid_shape_and_columns(self, capsys, write_config):
        code, out = _run(capsys, 'sweep', write_config(""), '--tmax', '1ms:3ms:1ms', '--bw', '0.5,1.0')
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ['t_max_s', 'bandwidth_fraction', 'n_users', 'seed', 'lambda',
                           'e_sum_opt_j', 'e_sum_baseline_j', 'nu', 'status', 'n_dropped']
        assert len(rows) == 7
        assert [r[1] for r in rows[1:]] == ['0.5'] * 3 + ['1'] * 3

    def test_single_point(self, capsys, write_config):
        code, out = _run(capsys, 'sweep', write_config(""), '--tmax', '5ms:5ms:1ms')
        assert code == 0
        assert len(out.strip().splitlines()) == 2

    def test_repeated_runs_are_identical(self, tmp_path, write_config):
        path = write_config("")
        outputs = []
        for name in ('a.csv', 'b.csv'):
            out = tmp_path / name
            assert app.main(['sweep', path, '--tmax', '1ms:4ms:1ms', '--bw', '0.2,1.0', '--out', str(out)]) == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    @pytest.mark.parametrize('tmax', ['3ms:1ms:1ms', '1ms:3ms', '1ms:3ms:0ms'])
    def test_bad_range_is_input_error(self, write_config, tmax):
        assert app.main(['sweep', write_config(""), '--tmax', tmax]) == 2

    def test_bad_fraction_is_input_error(self, write_config):
        assert app.main(['sweep', write_config(""), '--tmax', '1ms:2ms:1ms', '--bw', '1.5']) == 2


class TestCutoff:
    def test_rows_decrease_along_bandwidth(self, capsys, write_config):
        code, out = _run(capsys, 'cutoff', write_config(""), '--bw', '0.5,1.0', '--n', '20',
                         '--tend', '10ms', '--step', '0.05ms')
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r['bandwidth_fraction'] for r in rows] == ['0.5', '1']
        assert all(r['saturated'] == 'true' for r in rows)
        assert float(rows[1]['t_c_s']) < float(rows[0]['t_c_s'])

    def test_bad_count_is_input_error(self, write_config):
        assert app.main(['cutoff', write_config(""), '--bw', '1.0', '--n', '0']) == 2


class TestVerify:
    def test_small_cell_passes_grid_and_kkt(self, capsys, write_config):
        code, out = _run(capsys, 'verify', write_config(OVERLOAD_CELL))
        assert code == 0
        report = json.loads(out)
        assert report['mode'] == 'grid+kkt'
        assert report['passes']
        assert report['oracle']['energy_gap'] <= report['oracle']['gap_bound']

    def test_large_cell_runs_kkt_only(self, capsys, write_config):
        code, out = _run(capsys, 'verify', write_config(""))
        assert code == 0
        assert json.loads(out)['mode'] == 'kkt-only'

    def test_saved_solution_verifies(self, tmp_path, write_config):
        cell = write_config(OVERLOAD_CELL)
        solution = tmp_path / 'solution.csv'
        assert app.main(['solve', cell, '--out', str(solution)]) == 0
        assert app.main(['verify', cell, '--solution', str(solution), '--report', str(tmp_path / 'r.json')]) == 0
        assert json.loads((tmp_path / 'r.json').read_text())['passes']

    def test_corrupted_solution_fails(self, tmp_path, write_config):
        cell = write_config(OVERLOAD_CELL)
        solution = tmp_path / 'solution.csv'
        app.main(['solve', cell, '--out', str(solution)])
        lines = solution.read_text().splitlines()
        fields = lines[1].split(',')
        fields[2] = repr(float(fields[2]) * 0.5)
        lines[1] = ','.join(fields)
        solution.write_text("\n".join(lines) + "\n")
        assert app.main(['verify', cell, '--solution', str(solution)]) == 4

    def test_solution_for_other_cell_is_input_error(self, tmp_path, write_config):
        solution = tmp_path / 'solution.csv'
        app.main(['solve', write_config(OVERLOAD_CELL), '--out', str(solution)])
        assert app.main(['verify', write_config("", name='other.cfg'), '--solution', str(solution)]) == 2

    def test_truncated_solution_is_input_error(self, tmp_path, write_config):
        solution = tmp_path / 'solution.csv'
        solution.write_text("id,distance_m\n")
        assert app.main(['verify', write_config(OVERLOAD_CELL), '--solution', str(solution)]) == 2

    def test_serialized_scenario_verifies(self, capsys, overload_config, write_config):
        code, _ = _run(capsys, 'verify', write_config(serialize_config(overload_config)))
        assert code == 0
