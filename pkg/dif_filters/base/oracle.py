# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Dense-grid Bayesian ground truth for scalar models, evaluated with the trapezoid rule:
#   p(x_k, x_{k-1} | y) ∝ N(y; h(x_k), R) N(x_k; f(x_{k-1}), Q) p(x_{k-1})

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import xlogy
from scipy.stats import multivariate_normal, norm

from .constants import (GRID_BOUNDARY_FRACTION, GRID_BOUNDARY_MASS,
                        GRID_HALF_WIDTH, GRID_NORMALIZATION_TOL, GRID_POINTS)
from .exceptions import DimensionError, GridError, NumericalError
from .filters import kf_predict, kf_update
from .gaussian import Gaussian
from .slr import resolve_sigma, slr_linearize
from .ssm import StateSpaceModel

# rows of the transition kernel evaluated at once
KERNEL_BLOCK = 512


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n: int = GRID_POINTS

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise GridError(f'Grid upper bound {self.hi} must exceed lower bound {self.lo}')
        if self.n < 2:
            raise GridError(f'Grid needs at least 2 points, got {self.n}')

    @classmethod
    def around(cls, pilot: Gaussian, half_width: float = GRID_HALF_WIDTH, n: int = GRID_POINTS) -> 'GridSpec':
        std = float(pilot.std[0])
        if not std > 0:
            raise GridError('Pilot density has zero spread')
        mean = float(pilot.mean[0])
        return cls(mean - half_width * std, mean + half_width * std, n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def union(self, other: 'GridSpec') -> 'GridSpec':
        return GridSpec(min(self.lo, other.lo), max(self.hi, other.hi), max(self.n, other.n))

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n, self.step)
        w[0] = w[-1] = self.step / 2.0
        return w


@dataclass(frozen=True)
class Grid1D:
    """
    Density values (per unit length) on a uniform grid, normalized to integrate to one.
    """

    lo: float
    hi: float
    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        GridSpec(self.lo, self.hi, self.n)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.n,):
            raise GridError(f'Expected {self.n} density values, got shape {values.shape}')
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise GridError('Density values must be finite and nonnegative')
        integral = trapezoid(values, self.x)
        if abs(integral - 1.0) > GRID_NORMALIZATION_TOL:
            raise GridError(f'Grid density integrates to {integral}, not 1')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_unnormalized(cls, spec: GridSpec, density: np.ndarray) -> 'Grid1D':
        density = np.asarray(density, dtype=float)
        mass = trapezoid(density, spec.x)
        if not (np.isfinite(mass) and mass > 0):
            raise GridError('Density has no mass on the grid, widen the grid bounds')
        return cls(spec.lo, spec.hi, spec.n, density / mass)

    @classmethod
    def from_gaussian(cls, q: Gaussian, spec: Optional[GridSpec] = None) -> 'Grid1D':
        _require_scalar(q)
        spec = spec or GridSpec.around(q)
        return cls.from_unnormalized(spec, norm.pdf(spec.x, q.mean[0], q.std[0]))

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.lo, self.hi, self.n)

    @property
    def x(self) -> np.ndarray:
        return self.spec.x


def _require_scalar(q: Gaussian) -> None:
    if q.dim != 1:
        raise DimensionError(f'Grid oracle handles scalar densities only, got dimension {q.dim}')


def _require_scalar_model(model: StateSpaceModel) -> None:
    if model.state_dim != 1 or model.meas_dim != 1:
        raise DimensionError('Grid oracle handles scalar models only')


def _evaluate_scalar(fn: Callable, xs: np.ndarray) -> np.ndarray:
    return np.array([float(np.atleast_1d(fn(np.array([x])))[0]) for x in xs])


def _check_boundary(spec: GridSpec, density: np.ndarray, what: str) -> None:
    """ density must already be normalized """
    m = max(2, int(round(spec.n * GRID_BOUNDARY_FRACTION)))
    x = spec.x
    mass = trapezoid(density[:m], x[:m]) + trapezoid(density[-m:], x[-m:])
    if mass > GRID_BOUNDARY_MASS:
        raise GridError(f'{what} grid [{spec.lo:g}, {spec.hi:g}] is too narrow '
                        f'(boundary mass {mass:.2e}), please use wider bounds')


def _likelihood(model: StateSpaceModel, y: float, x: np.ndarray) -> np.ndarray:
    return norm.pdf(y, _evaluate_scalar(model.h, x), math.sqrt(model.R[0, 0]))


def _prior_values(prior: Gaussian, spec: GridSpec) -> np.ndarray:
    return norm.pdf(spec.x, prior.mean[0], prior.std[0])


def _kernel_rows(model: StateSpaceModel, x_prev: np.ndarray, x_next: np.ndarray):
    """ Yields (row slice, N(x_next[rows]; f(x_prev), Q)) blocks of the transition kernel """
    fx = _evaluate_scalar(model.f, x_prev)
    sd = math.sqrt(model.Q[0, 0])
    for start in range(0, x_next.size, KERNEL_BLOCK):
        rows = slice(start, min(start + KERNEL_BLOCK, x_next.size))
        yield rows, norm.pdf(x_next[rows, None], fx[None, :], sd)


def default_prev_grid(prior: Gaussian) -> GridSpec:
    return GridSpec.around(prior)


def default_predictive_grid(prior: Gaussian, model: StateSpaceModel, prev: Optional[GridSpec] = None) -> GridSpec:
    """ The image of the previous-state grid under f, padded by GRID_HALF_WIDTH process-noise deviations """
    prev = prev or default_prev_grid(prior)
    fx = _evaluate_scalar(model.f, prev.x)
    pad = GRID_HALF_WIDTH * math.sqrt(model.Q[0, 0])
    return GridSpec(float(fx.min()) - pad, float(fx.max()) + pad, prev.n)


def default_posterior_grid(prior: Gaussian, model: StateSpaceModel, y: float) -> GridSpec:
    """ Pilot: unscented posterior, widened to cover the measurement when h is the identity-like selector """
    sigma = resolve_sigma(None, 1)
    m_f = slr_linearize(model.f, prior, sigma)
    predicted = kf_predict(prior, m_f, model.Q)
    m_h = slr_linearize(model.h, predicted, sigma)
    pilot = kf_update(predicted, m_h, model.R, np.array([y]))
    spec = GridSpec.around(pilot)
    if np.allclose(m_h.A, 1.0) and np.allclose(m_h.b, 0.0):
        spec = spec.union(GridSpec.around(Gaussian([y], model.R)))
    return spec


def grid_predictive(prior: Gaussian, model: StateSpaceModel, grid: Optional[GridSpec] = None,
                    prev_grid: Optional[GridSpec] = None) -> Grid1D:
    """ Grid truth of p(x_k | y_{1:k-1}) """
    _require_scalar(prior)
    _require_scalar_model(model)
    prev_grid = prev_grid or default_prev_grid(prior)
    grid = grid or default_predictive_grid(prior, model, prev_grid)
    weights = prev_grid.trapezoid_weights() * _prior_values(prior, prev_grid)
    values = np.empty(grid.n)
    for rows, K in _kernel_rows(model, prev_grid.x, grid.x):
        values[rows] = K @ weights
    g = Grid1D.from_unnormalized(grid, values)
    _check_boundary(grid, g.values, 'Predictive')
    return g


def grid_posterior(prior: Gaussian, model: StateSpaceModel, y: float, grid: Optional[GridSpec] = None,
                   prev_grid: Optional[GridSpec] = None) -> Grid1D:
    """ Grid truth of p(x_k | y_{1:k}) """
    _require_scalar(prior)
    _require_scalar_model(model)
    y = float(np.atleast_1d(y)[0])
    prev_grid = prev_grid or default_prev_grid(prior)
    grid = grid or default_posterior_grid(prior, model, y)
    weights = prev_grid.trapezoid_weights() * _prior_values(prior, prev_grid)
    predictive = np.empty(grid.n)
    for rows, K in _kernel_rows(model, prev_grid.x, grid.x):
        predictive[rows] = K @ weights
    g = Grid1D.from_unnormalized(grid, predictive * _likelihood(model, y, grid.x))
    _check_boundary(grid, g.values, 'Posterior')
    return g


def grid_smoothed(prior: Gaussian, model: StateSpaceModel, y: float, grid: Optional[GridSpec] = None,
                  prev_grid: Optional[GridSpec] = None) -> Grid1D:
    """ Grid truth of p(x_{k-1} | y_{1:k}) on the previous-state grid """
    _require_scalar(prior)
    _require_scalar_model(model)
    y = float(np.atleast_1d(y)[0])
    prev_grid = prev_grid or default_prev_grid(prior)
    grid = grid or default_posterior_grid(prior, model, y)
    lik = grid.trapezoid_weights() * _likelihood(model, y, grid.x)
    evidence = np.zeros(prev_grid.n)
    for rows, K in _kernel_rows(model, prev_grid.x, grid.x):
        evidence += lik[rows] @ K
    g = Grid1D.from_unnormalized(prev_grid, evidence * _prior_values(prior, prev_grid))
    _check_boundary(prev_grid, g.values, 'Smoothed')
    return g


@dataclass(frozen=True)
class JointGrid:
    """ Normalized density of (x_{k-1}, x_k); values[j, i] is at (prev.x[i], grid.x[j]) """

    prev: GridSpec
    grid: GridSpec
    values: np.ndarray


def grid_joint_posterior(prior: Gaussian, model: StateSpaceModel, y: float, grid: Optional[GridSpec] = None,
                         prev_grid: Optional[GridSpec] = None) -> JointGrid:
    _require_scalar(prior)
    _require_scalar_model(model)
    y = float(np.atleast_1d(y)[0])
    prev_grid = prev_grid or default_prev_grid(prior)
    grid = grid or default_posterior_grid(prior, model, y)
    values = np.empty((grid.n, prev_grid.n))
    for rows, K in _kernel_rows(model, prev_grid.x, grid.x):
        values[rows] = K
    values *= _prior_values(prior, prev_grid)[None, :]
    values *= _likelihood(model, y, grid.x)[:, None]
    mass = trapezoid(trapezoid(values, prev_grid.x, axis=1), grid.x)
    if not (np.isfinite(mass) and mass > 0):
        raise GridError('Joint density has no mass on the grid, widen the grid bounds')
    return JointGrid(prev_grid, grid, values / mass)


def grid_moments(g: Grid1D) -> Gaussian:
    x = g.x
    mean = trapezoid(x * g.values, x)
    var = trapezoid((x - mean) ** 2 * g.values, x)
    if not var > 0:
        raise GridError('Grid density is degenerate (zero variance)')
    return Gaussian([mean], [[var]])


def kl_grid_vs_gaussian(g: Grid1D, q: Gaussian) -> float:
    """ KL(g || q) with 0 ln 0 = 0 """
    _require_scalar(q)
    var = float(q.cov[0, 0])
    if not var > 0:
        raise NumericalError(f'Gaussian variance must be positive, got {var}')
    log_q = norm.logpdf(g.x, q.mean[0], math.sqrt(var))
    integrand = xlogy(g.values, g.values) - g.values * log_q
    return float(trapezoid(integrand, g.x))


def kl_joint_grid_vs_gaussian(joint: JointGrid, q: Gaussian) -> float:
    """
    KL between the grid joint of (x_{k-1}, x_k) and a bivariate Gaussian in the same order.
    """
    if q.dim != 2:
        raise DimensionError(f'Expected a bivariate Gaussian, got dimension {q.dim}')
    X_prev, X_next = np.meshgrid(joint.prev.x, joint.grid.x)
    try:
        log_q = multivariate_normal(q.mean, q.cov).logpdf(np.dstack((X_prev, X_next)))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f'Joint Gaussian is singular: {e}')
    integrand = xlogy(joint.values, joint.values) - joint.values * log_q
    return float(trapezoid(trapezoid(integrand, joint.prev.x, axis=1), joint.grid.x))
