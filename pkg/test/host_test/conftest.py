# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
import os
from typing import Tuple

import numpy as np
import pytest

from dif_filters.base.gaussian import Gaussian

out_dir = ''


def pytest_addoption(parser):
    parser.addoption(
        '--output',
        action='store',
        default=os.path.join(os.path.abspath(os.path.dirname(__file__)), 'outputs'),
        help='Output directory for files written by command-line tests'
    )
    parser.addoption(
        '--full-size',
        action='store_true',
        default=False,
        help='Run the full 25-configuration tracking sweep (minutes)'
    )


def pytest_configure(config):
    global out_dir
    out_dir = config.getoption('--output')
    config.addinivalue_line('markers', 'full_size: full-size tracking sweep, enabled with --full-size')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--full-size'):
        return
    skip = pytest.mark.skip(reason='needs --full-size')
    for item in items:
        if 'full_size' in item.keywords:
            item.add_marker(skip)


def random_spd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """ Well-conditioned symmetric positive definite matrix """
    M = rng.standard_normal((n, n))
    return scale * (M @ M.T / n + 0.5 * np.eye(n))


def random_gaussian(rng: np.random.Generator, n: int, scale: float = 1.0) -> Gaussian:
    return Gaussian(rng.standard_normal(n) * scale, random_spd(rng, n, scale))


def exact_kalman_step(prior: Gaussian, F: np.ndarray, c: np.ndarray, Q: np.ndarray,
                      H: np.ndarray, d: np.ndarray, R: np.ndarray, y: np.ndarray) -> Tuple[Gaussian, Gaussian]:
    """ Textbook predict/update with an explicit inverse; (predicted, posterior) """
    m = F @ prior.mean + c
    P = F @ prior.cov @ F.T + Q
    S = H @ P @ H.T + R
    K = P @ H.T @ np.linalg.inv(S)
    mean = m + K @ (y - H @ m - d)
    cov = P - K @ S @ K.T
    return Gaussian.from_moments(m, P), Gaussian.from_moments(mean, cov)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture(scope='module')
def output_dir() -> str:
    """ Make sure that output dir exists """
    os.makedirs(out_dir, exist_ok=True)
    return out_dir
