# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# State-space models with additive Gaussian noise:
#   x_{k+1} ~ N(f(x_k), Q),  y_k ~ N(h(x_k), R)
#
# Coordinated-turn state layout: (px, vx, py, vy, omega).

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import block_diag

from .constants import (CT_PRIOR_MEAN, CT_PRIOR_VAR, CUBIC_A,
                        CUBIC_PRIOR_MEAN, CUBIC_PRIOR_VAR, CUBIC_Q, CUBIC_R,
                        DEFAULT_Q2, DEFAULT_T, OMEGA_EPS, TURN_SERIES_EPS)
from .exceptions import DimensionError
from .gaussian import Gaussian, is_psd, symmetrize

VectorFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StateSpaceModel:
    state_dim: int
    meas_dim: int
    f: VectorFunction
    h: VectorFunction
    Q: np.ndarray
    R: np.ndarray
    f_jacobian: Optional[VectorFunction] = None
    h_jacobian: Optional[VectorFunction] = None
    name: str = ''

    def __post_init__(self) -> None:
        if self.state_dim < 1 or self.meas_dim < 1:
            raise DimensionError('state_dim and meas_dim must be positive')
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if Q.shape != (self.state_dim, self.state_dim):
            raise DimensionError(f'Q has shape {Q.shape}, expected {(self.state_dim, self.state_dim)}')
        if R.shape != (self.meas_dim, self.meas_dim):
            raise DimensionError(f'R has shape {R.shape}, expected {(self.meas_dim, self.meas_dim)}')
        for label, M in (('Q', Q), ('R', R)):
            if not np.allclose(M, M.T) or not is_psd(M):
                raise ValueError(f'{label} must be symmetric positive semidefinite')
        object.__setattr__(self, 'Q', symmetrize(Q))
        object.__setattr__(self, 'R', symmetrize(R))

    @property
    def has_jacobians(self) -> bool:
        return self.f_jacobian is not None and self.h_jacobian is not None


def linear_model(F: np.ndarray, H: np.ndarray, Q: np.ndarray, R: np.ndarray,
                 f_offset: Optional[np.ndarray] = None, h_offset: Optional[np.ndarray] = None) -> StateSpaceModel:
    """ Affine-Gaussian model; every linearization backend is exact on it """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    c = np.zeros(F.shape[0]) if f_offset is None else np.asarray(f_offset, dtype=float)
    d = np.zeros(H.shape[0]) if h_offset is None else np.asarray(h_offset, dtype=float)
    return StateSpaceModel(
        state_dim=F.shape[0],
        meas_dim=H.shape[0],
        f=lambda x: F @ x + c,
        h=lambda x: H @ x + d,
        Q=Q,
        R=R,
        f_jacobian=lambda x: F,
        h_jacobian=lambda x: H,
        name='linear',
    )


def cubic_model(a: float = CUBIC_A, Q: float = CUBIC_Q, R: float = CUBIC_R) -> StateSpaceModel:
    """
    Scalar model x_{k+1} ~ N(a x_k^3, Q), y_k ~ N(x_k, R).
    """
    if not (Q > 0 and R > 0):
        raise ValueError('Q and R must be positive')
    return StateSpaceModel(
        state_dim=1,
        meas_dim=1,
        f=lambda x: a * np.asarray(x, dtype=float) ** 3,
        h=lambda x: np.asarray(x, dtype=float),
        Q=np.array([[Q]]),
        R=np.array([[R]]),
        f_jacobian=lambda x: np.atleast_2d(3.0 * a * np.asarray(x, dtype=float) ** 2),
        h_jacobian=lambda x: np.eye(1),
        name='cubic',
    )


@dataclass(frozen=True)
class CtParams:
    q1: float
    sigma2: float
    q2: float = DEFAULT_Q2
    T: float = DEFAULT_T

    def __post_init__(self) -> None:
        for label in ('q1', 'sigma2', 'q2', 'T'):
            if not getattr(self, label) > 0:
                raise ValueError(f'{label} must be positive, got {getattr(self, label)}')


def _turn_terms(omega: float, T: float) -> Tuple[float, float]:
    """
    Returns sin(T w)/w and (1 - cos(T w))/w, with their limits T and 0 at w = 0.
    """
    if abs(omega) < OMEGA_EPS:
        return T, 0.0
    half = math.sin(T * omega / 2.0)
    return math.sin(T * omega) / omega, 2.0 * half * half / omega


def _turn_term_derivatives(omega: float, T: float) -> Tuple[float, float]:
    """
    Derivatives of the two turn terms with respect to w.
    """
    u = T * omega
    if abs(u) < TURN_SERIES_EPS:
        # truncated series, exact to round-off below the threshold
        return -omega * T ** 3 / 3.0 * (1.0 - u * u / 10.0), T ** 2 / 2.0 * (1.0 - u * u / 4.0)
    half = math.sin(u / 2.0)
    ds = (u * math.cos(u) - math.sin(u)) / omega ** 2
    dc = (u * math.sin(u) - 2.0 * half * half) / omega ** 2
    return ds, dc


def ct_transition_matrix(omega: float, T: float = DEFAULT_T) -> np.ndarray:
    if not T > 0:
        raise ValueError('T must be positive')
    omega = float(omega)
    s_over_w, c_over_w = _turn_terms(omega, T)
    s, c = math.sin(T * omega), math.cos(T * omega)
    return np.array([
        [1.0, s_over_w, 0.0, -c_over_w, 0.0],
        [0.0, c, 0.0, -s, 0.0],
        [0.0, c_over_w, 1.0, s_over_w, 0.0],
        [0.0, s, 0.0, c, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])


def ct_transition(x: np.ndarray, T: float = DEFAULT_T) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return ct_transition_matrix(x[4], T) @ x


def ct_transition_jacobian(x: np.ndarray, T: float = DEFAULT_T) -> np.ndarray:
    """
    Jacobian of x -> F(x[4]) x. The first four columns are those of F; the last one
    is the derivative of F(w) x with respect to w.
    """
    x = np.asarray(x, dtype=float)
    omega = float(x[4])
    vx, vy = x[1], x[3]
    ds, dc = _turn_term_derivatives(omega, T)
    s, c = math.sin(T * omega), math.cos(T * omega)
    J = ct_transition_matrix(omega, T)
    J[:, 4] = [
        ds * vx - dc * vy,
        -T * s * vx - T * c * vy,
        dc * vx + ds * vy,
        T * c * vx - T * s * vy,
        1.0,
    ]
    return J


def ct_process_noise(q1: float, q2: float = DEFAULT_Q2, T: float = DEFAULT_T) -> np.ndarray:
    if not (q1 > 0 and q2 > 0 and T > 0):
        raise ValueError('q1, q2 and T must be positive')
    axis = q1 * np.array([[T ** 3 / 3.0, T ** 2 / 2.0],
                          [T ** 2 / 2.0, T]])
    return block_diag(axis, axis, [[q2]])


# positions of the coordinated-turn state
CT_H = np.array([[1.0, 0.0, 0.0, 0.0, 0.0],
                 [0.0, 0.0, 1.0, 0.0, 0.0]])


def ct_model(p: CtParams) -> StateSpaceModel:
    """
    Coordinated turn with a linear position measurement, R = sigma2 I_2.
    """
    T = p.T
    return StateSpaceModel(
        state_dim=5,
        meas_dim=2,
        f=lambda x: ct_transition(x, T),
        h=lambda x: CT_H @ x,
        Q=ct_process_noise(p.q1, p.q2, T),
        R=p.sigma2 * np.eye(2),
        f_jacobian=lambda x: ct_transition_jacobian(x, T),
        h_jacobian=lambda x: CT_H,
        name='coordinated-turn',
    )


def ct_prior() -> Gaussian:
    return Gaussian(np.array(CT_PRIOR_MEAN), np.diag(CT_PRIOR_VAR))


def cubic_prior() -> Gaussian:
    return Gaussian(np.array([CUBIC_PRIOR_MEAN]), np.array([[CUBIC_PRIOR_VAR]]))
