# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Kalman primitives on affine surrogates and the non-iterated EKF/UKF steps.

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DimensionError
from .gaussian import Gaussian, cho_solve_psd, symmetrize
from .slr import (AffineModel, SigmaConfig, analytic_linearize, resolve_sigma,
                  slr_linearize)
from .ssm import StateSpaceModel


@dataclass(frozen=True)
class StepResult:
    predicted: Gaussian
    posterior: Gaussian


def _check_input(m: AffineModel, dim: int, what: str) -> None:
    if m.in_dim != dim:
        raise DimensionError(f'{what} surrogate expects input dimension {m.in_dim}, belief has {dim}')


def kf_predict(prior: Gaussian, m: AffineModel, Q: np.ndarray) -> Gaussian:
    _check_input(m, prior.dim, 'Transition')
    Q = np.atleast_2d(Q)
    if Q.shape != (m.out_dim, m.out_dim):
        raise DimensionError(f'Process noise shape {Q.shape} does not match output dimension {m.out_dim}')
    mean = m.A @ prior.mean + m.b
    cov = m.A @ prior.cov @ m.A.T + Q + m.Omega
    return Gaussian(mean, symmetrize(cov))


def kf_update(pred: Gaussian, m: AffineModel, R: np.ndarray, y: np.ndarray) -> Gaussian:
    """
    Measurement update with the Joseph-form covariance.
    """
    _check_input(m, pred.dim, 'Measurement')
    y = np.atleast_1d(np.asarray(y, dtype=float))
    R = np.atleast_2d(R)
    if y.shape != (m.out_dim,) or R.shape != (m.out_dim, m.out_dim):
        raise DimensionError(f'Measurement of shape {y.shape} / R {R.shape} does not match output dimension {m.out_dim}')
    H, P = m.A, pred.cov
    noise = R + m.Omega
    S = H @ P @ H.T + noise
    PHt = P @ H.T
    K = cho_solve_psd(S, PHt.T).T
    mean = pred.mean + K @ (y - H @ pred.mean - m.b)
    I_KH = np.eye(pred.dim) - K @ H
    cov = I_KH @ P @ I_KH.T + K @ noise @ K.T
    return Gaussian(mean, symmetrize(cov))


def rts_gain(prior_prev: Gaussian, predicted: Gaussian, m: AffineModel) -> np.ndarray:
    """ G = P_prev A^T P_pred^{-1} """
    return cho_solve_psd(predicted.cov, m.A @ prior_prev.cov).T


def rts_smooth_step(prior_prev: Gaussian, predicted: Gaussian, posterior: Gaussian, m: AffineModel) -> Gaussian:
    """
    One-step Rauch-Tung-Striebel correction: returns the approximation of p(x_{k-1} | y_{1:k}).
    `predicted` must come from kf_predict(prior_prev, m, Q) with the same surrogate m.
    """
    _check_input(m, prior_prev.dim, 'Transition')
    if predicted.dim != m.out_dim or posterior.dim != m.out_dim:
        raise DimensionError('Predicted/posterior dimension does not match the transition surrogate')
    G = rts_gain(prior_prev, predicted, m)
    mean = prior_prev.mean + G @ (posterior.mean - predicted.mean)
    cov = prior_prev.cov + G @ (posterior.cov - predicted.cov) @ G.T
    return Gaussian(mean, symmetrize(cov))


def rts_joint(prior_prev: Gaussian, predicted: Gaussian, posterior: Gaussian, m: AffineModel) -> Gaussian:
    """
    Joint Gaussian of (x_{k-1}, x_k) given y_{1:k} implied by the one-step smoother;
    the cross covariance is G P_post.
    """
    smoothed = rts_smooth_step(prior_prev, predicted, posterior, m)
    G = rts_gain(prior_prev, predicted, m)
    cross = G @ posterior.cov
    cov = np.block([[smoothed.cov, cross],
                    [cross.T, posterior.cov]])
    return Gaussian(np.concatenate((smoothed.mean, posterior.mean)), symmetrize(cov))


def ekf_step(prior: Gaussian, model: StateSpaceModel, y: np.ndarray) -> StepResult:
    if not model.has_jacobians:
        raise ValueError(f'Model "{model.name}" has no analytic Jacobians')
    m_f = analytic_linearize(model.f, model.f_jacobian, prior, out_dim=model.state_dim)
    predicted = kf_predict(prior, m_f, model.Q)
    m_h = analytic_linearize(model.h, model.h_jacobian, predicted, out_dim=model.meas_dim)
    return StepResult(predicted, kf_update(predicted, m_h, model.R, y))


def ukf_step(prior: Gaussian, model: StateSpaceModel, y: np.ndarray,
             cfg: Optional[SigmaConfig] = None) -> StepResult:
    cfg = resolve_sigma(cfg, model.state_dim)
    m_f = slr_linearize(model.f, prior, cfg)
    predicted = kf_predict(prior, m_f, model.Q)
    m_h = slr_linearize(model.h, predicted, cfg)
    return StepResult(predicted, kf_update(predicted, m_h, model.R, y))

