# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
import math
import os
from dataclasses import replace

import numpy as np
import pytest

from dif_filters.base.bench import (Dataset, SweepSpec, divergence_flag,
                                    evaluate_algorithm, example_trajectories,
                                    normalize_algorithms, relative_rmse, rmse,
                                    run_algorithm, run_sweep, simulate,
                                    simulate_trajectory, stream)
from dif_filters.base.constants import (ALG_DIEKF, ALG_EKF, ALGORITHM_PAIRS,
                                        ALL_ALGORITHMS, DEFAULT_SIGMA2_GRID,
                                        TAG_MEASUREMENT, TAG_PRIOR)
from dif_filters.base.dif import DifConfig
from dif_filters.base.gaussian import Gaussian
from dif_filters.base.ssm import (CT_H, CtParams, ct_model, ct_transition,
                                  ct_prior)

SMOKE = SweepSpec(q1_grid=(1e-2,), sigma2_grid=(1.0,), n_trajectories=1, n_targets_per_trajectory=1, K=2)
SMALL = SweepSpec(q1_grid=(1e-3, 1e-1), sigma2_grid=(1.0, 1e2), n_trajectories=2, n_targets_per_trajectory=2,
                  K=15, master_seed=7)


class TestSweepSpec:

    def test_defaults(self):
        spec = SweepSpec()
        assert spec.n_configs == 25
        assert (spec.n_trajectories, spec.n_targets_per_trajectory, spec.K) == (20, 10, 130)

    def test_config_order(self):
        configs = SMALL.configs()
        assert [i for i, _ in configs] == [0, 1, 2, 3]
        assert [(p.q1, p.sigma2) for _, p in configs] == [(1e-3, 1.0), (1e-3, 1e2), (1e-1, 1.0), (1e-1, 1e2)]

    @pytest.mark.parametrize('kwargs', [
        {'q1_grid': ()},
        {'sigma2_grid': (1.0, -1.0)},
        {'K': 0},
        {'n_trajectories': 0},
        {'master_seed': -1},
        {'master_seed': 2 ** 64},
        {'T': 0.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SweepSpec(**kwargs)


class TestSimulation:

    def test_deterministic(self):
        params = SMALL.configs()[1][1]
        a, b = simulate(params, SMALL, 1), simulate(params, SMALL, 1)
        np.testing.assert_array_equal(a.truths, b.truths)
        np.testing.assert_array_equal(a.measurements, b.measurements)
        assert a.digest() == b.digest()

    def test_seed_changes_data(self):
        params = SMALL.configs()[0][1]
        other = replace(SMALL, master_seed=8)
        assert simulate(params, SMALL, 0).digest() != simulate(params, other, 0).digest()

    def test_configs_get_distinct_trajectories(self):
        params = SMALL.configs()[0][1]
        assert not np.array_equal(simulate(params, SMALL, 0).truths, simulate(params, SMALL, 1).truths)

    def test_independent_of_trajectory_count(self):
        params = SMALL.configs()[2][1]
        more = replace(SMALL, n_trajectories=5)
        few, many = simulate(params, SMALL, 2), simulate(params, more, 2)
        np.testing.assert_array_equal(many.measurements[:2], few.measurements)

    def test_shapes_and_layout(self):
        params = SMALL.configs()[0][1]
        data = simulate(params, SMALL, 0)
        assert isinstance(data, Dataset)
        assert data.truths.shape == (2, 16, 5)
        assert data.measurements.shape == (2, 2, 15, 2)
        # targets of one trajectory share the truth but not the noise
        assert not np.array_equal(data.measurements[0, 0], data.measurements[0, 1])

    def test_first_state_from_prior_stream(self):
        model = ct_model(CtParams(q1=1e-2, sigma2=1.0))
        truth = simulate_trajectory(model, ct_prior(), 3, 11, 4, 2)
        np.testing.assert_array_equal(truth[0], ct_prior().sample(stream(11, TAG_PRIOR, 4, 2)))

    def test_measurement_noise_stream(self):
        params = SMALL.configs()[3][1]
        data = simulate(params, SMALL, 3)
        noise = Gaussian(np.zeros(2), params.sigma2 * np.eye(2)).sample(stream(7, TAG_MEASUREMENT, 3, 1, 0), SMALL.K)
        np.testing.assert_allclose(data.measurements[1, 0], data.truths[1, 1:] @ CT_H.T + noise, atol=1e-12)

    def test_process_noise_covariance(self):
        model = ct_model(CtParams(q1=1e-2, sigma2=1.0))
        truth = simulate_trajectory(model, ct_prior(), 100000, 3, 0, 0)
        increments = truth[1:] - np.array([ct_transition(x) for x in truth[:-1]])
        sample = np.cov(increments.T)
        assert np.linalg.norm(sample - model.Q) <= 0.05 * np.linalg.norm(model.Q)

    def test_example_trajectories(self):
        data = example_trajectories(SMALL, 1, 1)
        full = simulate(SMALL.configs()[1][1], SMALL, 1)
        assert data.measurements.shape == (1, 1, 15, 2)
        np.testing.assert_array_equal(data.measurements[0, 0], full.measurements[0, 0])


class TestMetrics:

    def test_rmse_zero(self):
        assert rmse(np.zeros((4, 10, 5)), (0, 2)) == 0.0

    def test_rmse_three_four_five(self):
        errors = np.zeros((1, 1, 5))
        errors[0, 0, 0], errors[0, 0, 2] = 3.0, 4.0
        assert rmse(errors, (0, 2)) == 5.0

    def test_rmse_pools_runs(self, rng):
        errors = rng.standard_normal((6, 20, 5))
        per_run = [rmse(e, (1, 3)) for e in errors]
        assert rmse(errors, (1, 3)) == pytest.approx(math.sqrt(np.mean(np.square(per_run))), rel=1e-12)

    def test_rmse_empty(self):
        with pytest.raises(ValueError):
            rmse(np.zeros((0, 5)), (0, 2))

    @pytest.mark.parametrize('iterated, base, expected', [
        (2.0, 2.0, 1.0),
        (0.9, 1.0, 0.9),
        (0.0, 0.0, 1.0),
        (1.0, 0.0, math.inf),
    ])
    def test_relative_rmse(self, iterated, base, expected):
        assert relative_rmse(iterated, base) == pytest.approx(expected)

    def test_relative_rmse_negative(self):
        with pytest.raises(ValueError):
            relative_rmse(-1.0, 1.0)

    @pytest.mark.parametrize('pos_rmse, sigma2, expected', [
        (0.5, 1.0, False),
        (11.0, 100.0, True),
        (10.0, 100.0, False),
        (math.inf, 1.0, True),
        (math.nan, 1.0, True),
    ])
    def test_divergence_flag(self, pos_rmse, sigma2, expected):
        assert divergence_flag(pos_rmse, sigma2) is expected

    def test_divergence_flag_needs_positive_sigma(self):
        with pytest.raises(ValueError):
            divergence_flag(1.0, 0.0)
        with pytest.raises(ValueError):
            divergence_flag(1.0, 1.0, 0)

    @pytest.mark.parametrize('pos_rmse, sigma2, expected', [
        (1.414, 1.0, False),
        (1.42, 1.0, True),
        (0.14, 0.01, False),
        (0.142, 0.01, True),
        (14.0, 100.0, False),
    ])
    def test_divergence_flag_two_axes(self, pos_rmse, sigma2, expected):
        assert divergence_flag(pos_rmse, sigma2, 2) is expected

    def test_raw_measurements_sit_at_the_divergence_level(self, rng):
        sigma = 3.0
        errors = rng.normal(0.0, sigma, (200, 130, 5))
        raw = rmse(errors, (0, 2))
        assert raw == pytest.approx(math.sqrt(2.0) * sigma, rel=1e-2)
        # a filter 10% better than the raw measurements is not diverged
        assert not divergence_flag(0.9 * raw, sigma ** 2, 2)
        assert divergence_flag(1.1 * raw, sigma ** 2, 2)

    def test_normalize_algorithms(self):
        assert normalize_algorithms(None) == ALL_ALGORITHMS
        assert normalize_algorithms(['diplf', 'EKF ']) == ('EKF', 'DIPLF')
        with pytest.raises(ValueError):
            normalize_algorithms(['PF'])
        with pytest.raises(ValueError):
            normalize_algorithms([' '])


class TestEvaluate:

    def test_run_algorithm_dispatch(self):
        params = SMOKE.configs()[0][1]
        model = ct_model(params)
        ys = simulate(params, SMOKE, 0).measurements[0, 0]
        for name in ALL_ALGORITHMS:
            run = run_algorithm(name, ct_prior(), model, ys)
            assert run.means.shape == (SMOKE.K, 5)
        ekf = run_algorithm(ALG_EKF, ct_prior(), model, ys)
        single = run_algorithm(ALG_DIEKF, ct_prior(), model, ys, DifConfig(max_iters=1))
        np.testing.assert_array_equal(ekf.means, single.means)

    def test_digest_shared_across_algorithms(self):
        params = SMALL.configs()[0][1]
        data = simulate(params, SMALL, 0)
        digests = {evaluate_algorithm(a, data, ct_model(params), ct_prior()).digest for a in ALL_ALGORITHMS}
        assert len(digests) == 1

    def test_partial_rmse_pools_to_total(self):
        params = SMALL.configs()[0][1]
        res = evaluate_algorithm(ALG_DIEKF, simulate(params, SMALL, 0), ct_model(params), ct_prior())
        assert res.failed_runs == 0
        assert len(res.partial_pos_rmse) == SMALL.n_trajectories
        assert res.pos_rmse == pytest.approx(math.sqrt(np.mean(np.square(res.partial_pos_rmse))), rel=1e-12)
        assert res.vel_rmse == pytest.approx(math.sqrt(np.mean(np.square(res.partial_vel_rmse))), rel=1e-12)

    @pytest.mark.parametrize('config_index', range(4))
    def test_divergence_uses_both_position_axes(self, config_index):
        params = SMALL.configs()[config_index][1]
        res = evaluate_algorithm(ALG_EKF, simulate(params, SMALL, config_index), ct_model(params), ct_prior())
        expected = res.failed_runs > 0 or res.pos_rmse > math.sqrt(2.0 * params.sigma2)
        assert res.diverged is expected


class TestSweep:

    def test_smoke(self):
        seen = []
        report = run_sweep(SMOKE, progress=seen.append)
        assert len(seen) == 1
        assert report.algorithms == ALL_ALGORITHMS
        rows = report.rows()
        assert [r.algorithm for r in rows] == list(ALL_ALGORITHMS)
        for row in rows:
            assert math.isfinite(row.pos_rmse) and math.isfinite(row.vel_rmse)
            assert (row.v_pos is None) == (row.algorithm in ('EKF', 'UKF'))

    def test_same_seed_same_rows(self):
        a = [r.as_record() for r in run_sweep(SMOKE).rows()]
        b = [r.as_record() for r in run_sweep(SMOKE).rows()]
        assert a == b

    def test_worker_count_does_not_matter(self):
        serial = run_sweep(SMALL, ['EKF', 'DIEKF'], workers=1)
        parallel = run_sweep(SMALL, ['EKF', 'DIEKF'], workers=2)
        assert [r.as_record() for r in serial.rows()] == [r.as_record() for r in parallel.rows()]
        assert [c.digest for c in serial.configs] == [c.digest for c in parallel.configs]

    def test_relative_is_exact_ratio(self):
        report = run_sweep(SMALL, ['UKF', 'DIUKF', 'DIPLF'])
        for cfg in report.configs:
            for it in ('DIUKF', 'DIPLF'):
                v_pos, v_vel = report.relative(cfg.config_index, it)
                assert v_pos == cfg.results[it].pos_rmse / cfg.results['UKF'].pos_rmse
                assert v_vel == cfg.results[it].vel_rmse / cfg.results['UKF'].vel_rmse
        assert report.pairs() == [('DIUKF', 'UKF'), ('DIPLF', 'UKF')]

    def test_divergence_counts(self):
        report = run_sweep(SMALL, ['EKF'])
        assert report.divergence_counts() == {'EKF': sum(int(c.results['EKF'].diverged) for c in report.configs)}

    def test_invalid_workers(self):
        with pytest.raises(ValueError):
            run_sweep(SMOKE, workers=0)

    def test_reduced_sweep_ordering(self):
        spec = SweepSpec(n_trajectories=5, n_targets_per_trajectory=2)
        counts = run_sweep(spec, [ALG_EKF, ALG_DIEKF], workers=os.cpu_count() or 1).divergence_counts()
        assert counts[ALG_EKF] >= counts[ALG_DIEKF]


@pytest.fixture(scope='module')
def full_sweep():
    return run_sweep(SweepSpec(), workers=os.cpu_count() or 1)


@pytest.mark.full_size
class TestFullSweep:

    def test_divergence_counts(self, full_sweep):
        counts = full_sweep.divergence_counts()
        assert 20 <= counts[ALG_EKF] <= 25
        assert 3 <= counts[ALG_DIEKF] <= 8

    def test_diekf_diverges_only_at_high_noise(self, full_sweep):
        high = set(DEFAULT_SIGMA2_GRID[-2:])
        for cfg in full_sweep.configs:
            if cfg.results[ALG_DIEKF].diverged:
                assert cfg.params.sigma2 in high

    def test_iterated_filters_improve_velocity(self, full_sweep):
        for iterated, _ in ALGORITHM_PAIRS:
            better = sum(full_sweep.relative(c.config_index, iterated)[1] < 1.0 for c in full_sweep.configs)
            assert better >= 18

    def test_sigma_point_filters_keep_position(self, full_sweep):
        for iterated in ('DIUKF', 'DIPLF'):
            kept = sum(full_sweep.relative(c.config_index, iterated)[0] <= 1.05 for c in full_sweep.configs)
            assert kept >= 20
