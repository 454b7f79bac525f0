#!/usr/bin/env python
#
# dif_filters command-line tool:
# - illustrate: per-iteration DIEKF densities on the scalar cubic example, next to grid truth
# - track: the coordinated-turn Monte Carlo sweep, written as report.csv plus matrix files
# - report: renders a report.csv as text matrices
#
# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0

import csv
import math
import os
import sys
from dataclasses import replace
from typing import Iterable, List, Optional, Sequence  # noqa: F401

import numpy as np
from scipy.stats import norm

from dif_filters import __version__
from dif_filters.base import output_helpers
from dif_filters.base.argument_parser import get_parser
from dif_filters.base.bench import (ConfigResult, example_trajectories,
                                    run_sweep, stream)
from dif_filters.base.constants import (ILLUSTRATE_BAND, ILLUSTRATE_MAX_DRAWS,
                                        ILLUSTRATE_TOL, LOG_FILENAME,
                                        REPORT_FILENAME, TAG_ILLUSTRATE,
                                        TRAJECTORIES_FILENAME)
from dif_filters.base.dif import DifConfig, Variant, dif_step, iteration_joint
from dif_filters.base.exceptions import DifError
from dif_filters.base.filters import kf_predict
from dif_filters.base.gaussian import Gaussian
from dif_filters.base.logger import Logger
from dif_filters.base.oracle import (Grid1D, GridSpec, default_posterior_grid,
                                     default_predictive_grid,
                                     default_prev_grid, grid_joint_posterior,
                                     grid_moments, grid_posterior,
                                     grid_predictive, grid_smoothed,
                                     kl_grid_vs_gaussian,
                                     kl_joint_grid_vs_gaussian)
from dif_filters.base.output_helpers import (error_print, note_print,
                                             success_print, table_print)
from dif_filters.base.report import (format_value, read_report,
                                     render_divergence_summary, render_report,
                                     write_matrices, write_report,
                                     write_trajectories)
from dif_filters.base.slr import analytic_linearize
from dif_filters.base.ssm import cubic_model, cubic_prior
from dif_filters.config import Config, sweep_settings

DENSITIES = ('smoothed', 'predictive', 'posterior')
SUMMARY_HEADER = ('iteration', 'smoothed_mean', 'smoothed_var', 'predictive_mean', 'predictive_var',
                  'posterior_mean', 'posterior_var', 'kl_smoothed', 'kl_predictive', 'kl_posterior', 'kl_joint')


def _write_csv(path, header, rows):  # type: (str, Sequence[str], Iterable[Sequence[str]]) -> None
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def _write_density(path, spec, values):  # type: (str, GridSpec, np.ndarray) -> None
    _write_csv(path, ('x', 'density'), ((format_value(x), format_value(v)) for x, v in zip(spec.x, values)))


def sample_illustration_measurement(seed):  # type: (int) -> float
    """
    Draws x_{k-1} from the prior, x_k through the cubic transition, then y_k, and keeps the
    first y_k outside the central band of the EKF measurement predictive. Measurements near
    the EKF prediction leave the linearization error of iteration 0 hidden.
    """
    model, prior = cubic_model(), cubic_prior()
    predicted = kf_predict(prior, analytic_linearize(model.f, model.f_jacobian, prior, out_dim=1), model.Q)
    m_h = analytic_linearize(model.h, model.h_jacobian, predicted, out_dim=1)
    centre = float((m_h.A @ predicted.mean + m_h.b)[0])
    spread = math.sqrt((m_h.A @ predicted.cov @ m_h.A.T + model.R)[0, 0])

    rng = stream(seed, TAG_ILLUSTRATE)
    for _ in range(ILLUSTRATE_MAX_DRAWS):
        x_prev = prior.sample(rng)
        x = Gaussian(model.f(x_prev), model.Q).sample(rng)
        y = float(Gaussian(model.h(x), model.R).sample(rng)[0])
        if abs(y - centre) > ILLUSTRATE_BAND * spread:
            return y
    raise DifError(f'No measurement outside the EKF band in {ILLUSTRATE_MAX_DRAWS} draws (seed {seed})')


def cmd_illustrate(out_dir, iters, seed=0):  # type: (str, int, int) -> List[str]
    """
    Writes iter<i>_<density>.csv for every iteration, truth_<density>.csv, truth_moments.csv
    and summary.csv (moments and KL divergences from the grid truth per iteration).
    Returns the written paths.
    """
    model, prior = cubic_model(), cubic_prior()
    y = sample_illustration_measurement(seed)
    os.makedirs(out_dir, exist_ok=True)
    note_print(f'Cubic example: measurement y = {y!r} (seed {seed})')

    step = dif_step(prior, model, np.array([y]), DifConfig(Variant.DIEKF, max_iters=iters, tol=ILLUSTRATE_TOL))

    prev_spec = default_prev_grid(prior)
    post_spec = default_posterior_grid(prior, model, y)
    pred_spec = default_predictive_grid(prior, model, prev_spec)
    truth = {
        'smoothed': grid_smoothed(prior, model, y, post_spec, prev_spec),
        'predictive': grid_predictive(prior, model, pred_spec, prev_spec),
        'posterior': grid_posterior(prior, model, y, post_spec, prev_spec),
    }
    joint = grid_joint_posterior(prior, model, y, post_spec, prev_spec)

    written = []
    for name in DENSITIES:
        path = os.path.join(out_dir, f'truth_{name}.csv')
        _write_density(path, truth[name].spec, truth[name].values)
        written.append(path)
    moments = {name: grid_moments(g) for name, g in truth.items()}
    path = os.path.join(out_dir, 'truth_moments.csv')
    _write_csv(path, ('density', 'mean', 'var'),
               ((name, format_value(m.mean[0]), format_value(m.cov[0, 0])) for name, m in moments.items()))
    written.append(path)

    summary = []
    for i, record in enumerate(step.trace.iterations):
        approx = {'smoothed': record.smoothed_prev, 'predictive': record.predicted, 'posterior': record.posterior}
        line = [str(i)]
        for name in DENSITIES:
            q = approx[name]
            line += [format_value(q.mean[0]), format_value(q.cov[0, 0])]
            g = truth[name]  # type: Grid1D
            path = os.path.join(out_dir, f'iter{i}_{name}.csv')
            _write_density(path, g.spec, norm.pdf(g.x, q.mean[0], q.std[0]))
            written.append(path)
        line += [format_value(kl_grid_vs_gaussian(truth[name], approx[name])) for name in DENSITIES]
        line.append(format_value(kl_joint_grid_vs_gaussian(joint, iteration_joint(prior, record))))
        summary.append(line)

    path = os.path.join(out_dir, 'summary.csv')
    _write_csv(path, SUMMARY_HEADER, summary)
    written.append(path)
    success_print(f'{len(step.trace.iterations)} iteration(s) written to {out_dir}')
    return written


def _progress_printer(logger, total):  # type: (Logger, int) -> object
    def progress(res):  # type: (ConfigResult) -> None
        parts = []
        for alg, r in res.results.items():
            mark = ' diverged' if r.diverged else ''
            parts.append(f'{alg} pos {r.pos_rmse:.4g} vel {r.vel_rmse:.4g}{mark}')
        logger.print(f'[{res.config_index + 1}/{total}] q1={res.params.q1:g} sigma2={res.params.sigma2:g}: '
                     + ', '.join(parts))
    return progress


def cmd_track(config_path=None, out_dir='.', seed=None, algorithms=None, workers=None, trajectories=None,
              timestamps=False, timestamp_format=None):
    # type: (Optional[str], str, Optional[int], Optional[Sequence[str]], Optional[int], Optional[int], bool, Optional[str]) -> str
    """ Runs the sweep, writes report.csv with its matrices and returns the report path """
    config, _ = Config().load_configuration(config_path, verbose=True)
    settings = sweep_settings(config)
    spec = settings.spec
    if seed is not None:
        spec = replace(spec, master_seed=seed)
    algs = tuple(algorithms) if algorithms else settings.algorithms
    n_workers = workers or settings.workers

    os.makedirs(out_dir, exist_ok=True)
    logger_kwargs = {'timestamps': timestamps}
    if timestamp_format:
        logger_kwargs['timestamp_format'] = timestamp_format
    with Logger(**logger_kwargs) as logger:  # type: ignore
        logger.start_logging(os.path.join(out_dir, LOG_FILENAME))
        logger.print(f'dif-filters {__version__}: {spec.n_configs} configurations x '
                     f'{spec.n_trajectories * spec.n_targets_per_trajectory} runs, K={spec.K}, '
                     f'algorithms {",".join(algs)}, seed {spec.master_seed}, {n_workers} worker(s)')
        report = run_sweep(spec, algs, settings.dif_cfg, n_workers, _progress_printer(logger, spec.n_configs))

        rows = report.rows()
        report_path = os.path.join(out_dir, REPORT_FILENAME)
        write_report(rows, report_path)
        matrices = write_matrices(rows, out_dir)
        logger.print(f'Report written to {report_path} ({len(matrices)} matrix files)')

        if trajectories:
            data = example_trajectories(spec, 0, trajectories)
            path = os.path.join(out_dir, TRAJECTORIES_FILENAME)
            write_trajectories(path, data.truths, data.measurements[:, 0])
            logger.print(f'{data.truths.shape[0]} example trajectories written to {path}')

    table_print(render_divergence_summary(rows))
    return report_path


def cmd_report(path):  # type: (str) -> None
    rows = read_report(path)
    text = render_report(rows)
    if text:
        table_print(text + '\n')
    table_print(render_divergence_summary(rows))


def main(argv=None):  # type: (Optional[List[str]]) -> None
    parser = get_parser()
    args = parser.parse_args(argv)
    output_helpers.force_color = args.force_color

    try:
        if args.command == 'illustrate':
            cmd_illustrate(args.out, args.iters, args.seed)
        elif args.command == 'track':
            cmd_track(args.config, args.out, args.seed, args.algorithms, args.workers, args.trajectories,
                      args.timestamps, args.timestamp_format)
        else:
            cmd_report(args.file)
    except (DifError, OSError, ValueError) as e:
        error_print(str(e))
        sys.exit(1)
    except KeyboardInterrupt:
        error_print('Interrupted')
        sys.exit(1)


if __name__ == '__main__':
    main()
