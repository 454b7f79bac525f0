# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Linearization backends. Both turn a function g and an expansion density q into the
# affine surrogate g(x) ~ A x + b + e, e ~ N(0, Omega).

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .exceptions import DimensionError, NumericalError
from .gaussian import (Gaussian, cho_solve_psd, chol_psd, clip_psd, is_psd,
                       symmetrize)

VectorFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AffineModel:
    A: np.ndarray
    b: np.ndarray
    Omega: np.ndarray

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        Omega = np.atleast_2d(np.asarray(self.Omega, dtype=float))
        if A.ndim != 2 or b.shape != (A.shape[0],) or Omega.shape != (A.shape[0], A.shape[0]):
            raise DimensionError(f'Inconsistent affine model shapes A{A.shape} b{b.shape} Omega{Omega.shape}')
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(Omega))):
            raise NumericalError('Affine model has non-finite entries')
        Omega = symmetrize(Omega)
        if not is_psd(Omega):
            raise NumericalError('Linearization error covariance is not positive semidefinite')
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'Omega', Omega)

    @property
    def in_dim(self) -> int:
        return int(self.A.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.A.shape[0])

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b


@dataclass(frozen=True)
class SigmaConfig:
    """
    Scaled unscented transform parameters.
    """

    alpha: float
    kappa: float
    beta: float = 2.0

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f'alpha must be positive, got {self.alpha}')

    @classmethod
    def default_tuning(cls, n: int) -> 'SigmaConfig':
        """
        alpha = sqrt(3/n), kappa = n (3/2 - alpha^2) / alpha^2, beta = 2; this puts a
        weight of 1/3 on the central sigma point for every n.
        """
        alpha = math.sqrt(3.0 / n)
        kappa = n * (1.5 - alpha ** 2) / alpha ** 2
        return cls(alpha=alpha, kappa=kappa, beta=2.0)

    def scaling(self, n: int) -> float:
        """ Returns lambda for dimension n """
        spread = self.alpha ** 2 * (n + self.kappa)
        if not spread > 0:
            raise ValueError(f'alpha^2 (n + kappa) must be positive for n={n}, got {spread}')
        return spread - n


def resolve_sigma(cfg: Optional[SigmaConfig], n: int) -> SigmaConfig:
    return cfg if cfg is not None else SigmaConfig.default_tuning(n)


def _evaluate(f: VectorFunction, x: np.ndarray) -> np.ndarray:
    return np.atleast_1d(np.asarray(f(x), dtype=float))


def analytic_linearize(f: VectorFunction, jacobian: VectorFunction, q: Gaussian,
                       out_dim: Optional[int] = None) -> AffineModel:
    """
    First-order Taylor expansion about q.mean; the linearization error is ignored (Omega = 0).
    """
    mu = q.mean
    fx = _evaluate(f, mu)
    A = np.atleast_2d(np.asarray(jacobian(mu), dtype=float))
    if out_dim is not None and fx.size != out_dim:
        raise DimensionError(f'Function output has dimension {fx.size}, expected {out_dim}')
    if A.shape != (fx.size, mu.size):
        raise DimensionError(f'Jacobian shape {A.shape} does not match ({fx.size}, {mu.size})')
    return AffineModel(A, fx - A @ mu, np.zeros((fx.size, fx.size)))


def sigma_points(q: Gaussian, cfg: SigmaConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns (points, w_mean, w_cov); points has one row per sigma point, 2n + 1 rows.
    """
    n = q.dim
    lam = cfg.scaling(n)
    L = chol_psd(q.cov)
    offsets = math.sqrt(n + lam) * L.T  # rows are the scaled columns of L
    points = np.vstack((q.mean, q.mean + offsets, q.mean - offsets))

    w_mean = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    w_cov = w_mean.copy()
    w_mean[0] = lam / (n + lam)
    w_cov[0] = w_mean[0] + 1.0 - cfg.alpha ** 2 + cfg.beta
    return points, w_mean, w_cov


def slr_linearize(f: VectorFunction, q: Gaussian, cfg: SigmaConfig) -> AffineModel:
    """
    Statistical linear regression of f with respect to q using the unscented transform.
    """
    points, w_mean, w_cov = sigma_points(q, cfg)
    values = np.vstack([_evaluate(f, x) for x in points])
    if not np.all(np.isfinite(values)):
        raise NumericalError('Function is not finite at the sigma points')
    z_bar = w_mean @ values
    dx = points - q.mean
    dz = values - z_bar
    C = (dx * w_cov[:, None]).T @ dz  # n x m cross covariance
    S = (dz * w_cov[:, None]).T @ dz  # m x m
    A = cho_solve_psd(q.cov, C).T
    b = z_bar - A @ q.mean
    Omega = clip_psd(S - A @ q.cov @ A.T)
    return AffineModel(A, b, Omega)
