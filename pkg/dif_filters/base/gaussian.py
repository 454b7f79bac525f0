# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Gaussian belief representation and the covariance primitives every other module builds on.

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .constants import (JITTER_GROWTH, JITTER_RETRIES, JITTER_START,
                        PSD_EIG_RTOL, SYMMETRY_RTOL)
from .exceptions import DimensionError, NumericalError


def symmetrize(M: np.ndarray) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f'Expected a square matrix, got shape {M.shape}')
    return (M + M.T) / 2.0


def min_eigenvalue(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(M))[0])


def is_psd(M: np.ndarray, rtol: float = PSD_EIG_RTOL) -> bool:
    M = symmetrize(M)
    trace = max(float(np.trace(M)), 0.0)
    return min_eigenvalue(M) >= -rtol * trace


def clip_psd(M: np.ndarray) -> np.ndarray:
    """
    Project a symmetric matrix onto the PSD cone by flooring its eigenvalues at zero.
    """
    w, V = np.linalg.eigh(symmetrize(M))
    return symmetrize((V * np.maximum(w, 0.0)) @ V.T)


def chol_psd(P: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of a covariance.

    Round-off indefiniteness is absorbed by adding a diagonal jitter of
    JITTER_START * trace(P) / d, grown by JITTER_GROWTH on each of JITTER_RETRIES retries.
    """
    P = symmetrize(P)
    if not np.all(np.isfinite(P)):
        raise NumericalError('Covariance contains non-finite entries')
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        pass

    d = P.shape[0]
    scale = float(np.trace(P)) / d
    jitter = JITTER_START * (scale if scale > 0 else 1.0)
    for _ in range(JITTER_RETRIES):
        try:
            return np.linalg.cholesky(P + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            jitter *= JITTER_GROWTH
    eig = min_eigenvalue(P)
    raise NumericalError(f'Covariance is not positive semidefinite (smallest eigenvalue {eig:.3e})', eigenvalue=eig)


def cho_solve_psd(P: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Solve P X = B for a symmetric positive definite P without forming the inverse.
    """
    try:
        factor = linalg.cho_factor(symmetrize(P), lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f'Matrix is singular or not positive definite: {e}')
    return linalg.cho_solve(factor, B, check_finite=False)


@dataclass(frozen=True)
class Gaussian:
    """
    N(mean, cov). Construction validates the shape, symmetry and PSD invariants
    and stores an exactly symmetric covariance.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float)).copy()
        if mean.ndim != 1:
            raise DimensionError(f'Gaussian mean must be a vector, got shape {mean.shape}')
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(f'Covariance shape {cov.shape} does not match mean dimension {mean.size}')
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise NumericalError('Gaussian has non-finite mean or covariance')
        scale = max(float(np.max(np.abs(cov))), 1.0)
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
            raise NumericalError('Covariance is not symmetric')
        cov = symmetrize(cov)
        if not is_psd(cov):
            eig = min_eigenvalue(cov)
            raise NumericalError(f'Covariance is not positive semidefinite (smallest eigenvalue {eig:.3e})',
                                 eigenvalue=eig)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cov', cov)

    @classmethod
    def from_moments(cls, mean: np.ndarray, cov: np.ndarray) -> 'Gaussian':
        """ Build from a covariance that may carry floating-point asymmetry """
        return cls(mean, symmetrize(cov))

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """ Draw using the lower Cholesky factor so that draws are reproducible across platforms """
        L = chol_psd(self.cov)
        shape = (self.dim,) if size is None else (size, self.dim)
        z = rng.standard_normal(shape)
        return self.mean + z @ L.T

    def with_mean(self, mean: np.ndarray) -> 'Gaussian':
        return Gaussian(mean, self.cov)


def kl_gaussian(p: Gaussian, q: Gaussian) -> float:
    """
    KL(p || q) in closed form.
    """
    if p.dim != q.dim:
        raise DimensionError(f'Dimension mismatch: {p.dim} vs {q.dim}')
    try:
        factor = linalg.cho_factor(q.cov, lower=True)
    except linalg.LinAlgError:
        raise NumericalError('Covariance of q is singular')
    diff = q.mean - p.mean
    trace_term = float(np.trace(linalg.cho_solve(factor, p.cov)))
    maha = float(diff @ linalg.cho_solve(factor, diff))
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    sign, logdet_p = np.linalg.slogdet(p.cov)
    if sign <= 0:
        return float('inf')
    kl = 0.5 * (trace_term + maha - p.dim + logdet_q - logdet_p)
    return max(kl, 0.0)
