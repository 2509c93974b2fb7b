"""
Energies, offloading ratio, delay sweeps and cut-off delays
"""
import numpy as np
import pytest

from services.metrics import (
    bandwidth_tradeoff,
    baseline_energy,
    cutoff_delay,
    delay_grid,
    evaluate,
    offloading_percentage,
    optimized_energy,
    sweep_tmax,
)
from services.edge_model import comm_delay_coeff
from services.optimizer import LoadStatus, solve
from services.scenario import generate

FRACTIONS = [0.2, 0.4, 0.6, 0.8, 1.0]


def test_reference_baseline_energy(reference_scenario):
    assert baseline_energy(reference_scenario) == pytest.approx(17.5e-3, rel=1e-12)


def test_reference_operating_point(reference_scenario):
    row = evaluate(reference_scenario)
    assert row.status == LoadStatus.UNDERLOADED
    assert row.nu == 0.0
    assert row.e_sum_opt < row.e_sum_baseline
    assert 0.0 < row.offloading_ratio < 1.0


def test_nothing_offloaded_beyond_the_gate(reference_config):
    scenario = generate(reference_config.with_updates(n_users=2, distances={0: 500.0, 1: 700.0}))
    solution = solve(scenario)
    assert offloading_percentage(scenario, solution) == 0.0
    assert optimized_energy(scenario, solution) == baseline_energy(scenario)


def test_ratio_is_data_weighted(overload_scenario):
    solution = solve(overload_scenario)
    assert offloading_percentage(overload_scenario, solution) == pytest.approx(np.mean(solution.alpha))


class TestSweeps:
    def test_rows_follow_input_order(self, reference_config):
        t_values = [1e-3, 2e-3, 5e-3]
        rows = sweep_tmax(reference_config, t_values, workers=3)
        assert [r.t_max for r in rows] == t_values
        assert rows == sweep_tmax(reference_config, t_values, workers=1)

    def test_single_point(self, reference_config):
        assert len(sweep_tmax(reference_config, [5e-3])) == 1

    @pytest.mark.parametrize('t_values', [[], [2e-3, 1e-3], [0.0, 1e-3], [1e-3, 1e-3]])
    def test_bad_delay_lists(self, reference_config, t_values):
        with pytest.raises(ValueError):
            sweep_tmax(reference_config, t_values)

    def test_delay_grid_includes_end(self):
        grid = delay_grid(1e-3, 20e-3, 1e-3)
        assert len(grid) == 20
        assert grid[-1] == pytest.approx(20e-3)
        with pytest.raises(ValueError):
            delay_grid(2e-3, 1e-3, 1e-3)

    def test_trends_over_delay_and_bandwidth(self, reference_config):
        t_values = delay_grid(1e-3, 20e-3, 1e-3)
        ratios = []
        for fraction in FRACTIONS:
            rows = sweep_tmax(reference_config.with_updates(bandwidth_fraction=fraction), t_values)
            lam = np.array([r.offloading_ratio for r in rows])
            energy = np.array([r.e_sum_opt for r in rows])
            assert np.all(np.diff(lam) >= -1e-12)
            assert np.all(np.diff(energy) <= 1e-12)
            ratios.append(lam)
        ratios = np.array(ratios)
        assert np.all(np.diff(ratios, axis=0) >= -1e-12)

    def test_ratio_constant_after_cutoff(self, reference_config):
        result = cutoff_delay(reference_config, 0.05e-3, 20e-3, 0.05e-3)
        assert result.saturated
        rows = sweep_tmax(reference_config, delay_grid(result.t_c, 20e-3, 1e-3))
        assert all(r.offloading_ratio == pytest.approx(result.lambda_at_tc, abs=1e-12) for r in rows)

    def test_saturated_ratio_matches_gate_geometry(self, reference_config):
        # devices inside 0.58 R offload fully once the budget is loose
        ratios = [
            evaluate(generate(reference_config.with_updates(seed=seed, t_max=20e-3))).offloading_ratio
            for seed in range(200)
        ]
        mean = np.mean(ratios)
        std_err = np.std(ratios, ddof=1) / np.sqrt(len(ratios))
        assert abs(mean - 0.58 ** 2) <= 3 * std_err


class TestCutoff:
    def test_unsaturated_grid_is_flagged(self, reference_config):
        result = cutoff_delay(reference_config, 0.5e-3, 1.5e-3, 0.1e-3)
        assert not result.saturated
        assert result.t_c == 1.5e-3

    def test_cutoff_sits_past_the_communication_time(self, reference_config):
        result = cutoff_delay(reference_config, 0.05e-3, 10e-3, 0.05e-3)
        # k = 2.3667 ms at full bandwidth
        assert 2.3e-3 < result.t_c < 3e-3
        assert result.grid_step == 0.05e-3

    def test_bandwidth_delay_tradeoff(self, reference_config):
        n_values = [20, 40, 60, 80, 100]
        rows = bandwidth_tradeoff(reference_config, FRACTIONS, n_values, 0.05e-3, 25e-3, 0.05e-3)
        assert [(r.n_users, r.bandwidth_fraction) for r in rows] == [(n, f) for n in n_values for f in FRACTIONS]
        assert all(r.saturated for r in rows)
        t_c = np.array([r.t_c for r in rows]).reshape(len(n_values), len(FRACTIONS))
        assert np.all(np.diff(t_c, axis=1) < 0)
        assert np.all(np.diff(t_c, axis=0) >= 0)
        row_50 = {r.bandwidth_fraction: r.t_c for r in bandwidth_tradeoff(
            reference_config, [0.4, 1.0], [50], 0.05e-3, 25e-3, 0.05e-3)}
        assert row_50[1.0] < row_50[0.4] / 2

    def test_tradeoff_needs_cells(self, reference_config):
        with pytest.raises(ValueError):
            bandwidth_tradeoff(reference_config, [], [50], 1e-3, 2e-3, 1e-3)


def test_ratio_matches_margin_capped_closed_form(tiny_gamma_config):
    scenario = generate(tiny_gamma_config)
    row = evaluate(scenario)
    k = comm_delay_coeff(scenario.users[0])
    assert row.nu == 0.0
    assert row.offloading_ratio == pytest.approx(min(1.0, (1 - 1e-6) * 1e-3 / k), rel=1e-9)


def test_no_gated_devices_are_flat_from_the_start(reference_config):
    far = reference_config.with_updates(n_users=2, distances={0: 500.0, 1: 700.0})
    result = cutoff_delay(far, 1e-3, 5e-3, 1e-3)
    assert result.saturated
    assert result.t_c == 1e-3
    assert result.lambda_at_tc == 0.0


def test_single_device_baseline(reference_config):
    assert baseline_energy(generate(reference_config.with_updates(n_users=1))) == pytest.approx(3.5e-4)
