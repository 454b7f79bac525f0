# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0

import argparse
import os

from .constants import (ALL_ALGORITHMS, DEFAULT_ILLUSTRATE_ITERS,
                        DEFAULT_ILLUSTRATE_SEED, DEFAULT_OUT_DIR,
                        DEFAULT_TIMESTAMP_FORMAT)


def _positive_int(text):  # type: (str) -> int
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'"{text}" is not an integer')
    if value < 1:
        raise argparse.ArgumentTypeError(f'expected a positive integer, got {value}')
    return value


def _seed(text):  # type: (str) -> int
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f'"{text}" is not an integer')
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError('seed must be a 64-bit unsigned integer')
    return value


def _algorithm_list(text):  # type: (str) -> list
    names = [a.strip().upper() for a in text.split(',') if a.strip()]
    unknown = [a for a in names if a not in ALL_ALGORITHMS]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            f'unknown algorithm(s) {", ".join(unknown) or "(none given)"}; choose from {",".join(ALL_ALGORITHMS)}')
    return names


def get_parser():  # type: () -> argparse.ArgumentParser
    parser = argparse.ArgumentParser('dif_filters - dynamically iterated filters and their tracking benchmark')

    parser.add_argument(
        '--force-color',
        help='Always colored diagnostics, even if output is redirected.',
        default=False,
        action='store_true')

    parser.add_argument(
        '--timestamps',
        help='Add timestamp for each progress line',
        default=False,
        action='store_true')

    parser.add_argument(
        '--timestamp-format',
        default=os.environ.get('DIF_FILTERS_TIMESTAMP_FORMAT', DEFAULT_TIMESTAMP_FORMAT),
        help='Set a strftime()-compatible timestamp format'
    )

    subparsers = parser.add_subparsers(dest='command', metavar='{illustrate,track,report}')
    subparsers.required = True

    illustrate = subparsers.add_parser(
        'illustrate',
        help='Run DIEKF on the scalar cubic example and write per-iteration densities with grid truth')
    illustrate.add_argument(
        '--iters',
        help='Number of linearization passes, including iteration 0',
        type=_positive_int,
        default=DEFAULT_ILLUSTRATE_ITERS)
    illustrate.add_argument(
        '--seed',
        help='Seed of the sampled measurement',
        type=_seed,
        default=DEFAULT_ILLUSTRATE_SEED)
    illustrate.add_argument(
        '--out',
        help='Output directory',
        default=os.environ.get('DIF_FILTERS_OUT_DIR', DEFAULT_OUT_DIR))

    track = subparsers.add_parser(
        'track',
        help='Run the coordinated-turn Monte Carlo sweep and write the RMSE report')
    track.add_argument(
        '--config',
        help='Sweep configuration file. If not set, the usual locations are searched '
             '(DIF_FILTERS_CFGFILE, current directory, ~/.config/dif-filters, home directory).',
        default=None)
    track.add_argument(
        '--seed',
        help='Master seed, overrides master_seed of the configuration',
        type=_seed,
        default=None)
    track.add_argument(
        '--out',
        help='Output directory',
        default=os.environ.get('DIF_FILTERS_OUT_DIR', DEFAULT_OUT_DIR))
    track.add_argument(
        '--algorithms',
        help=f'Comma-separated subset of {",".join(ALL_ALGORITHMS)}',
        type=_algorithm_list,
        default=None)
    track.add_argument(
        '--workers',
        help='Number of worker processes, overrides the configuration',
        type=_positive_int,
        default=None)
    track.add_argument(
        '--trajectories',
        help='Also export this many example trajectories of the first configuration',
        type=_positive_int,
        default=None)

    report = subparsers.add_parser(
        'report',
        help='Render a report file as text matrices')
    report.add_argument('file', help='Report CSV written by "track"')

    return parser
