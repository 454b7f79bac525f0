# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Dynamically iterated filters. Every time step iterates
#   time update -> measurement update -> one-step smoothing
# from the same prior and measurement, re-linearizing the transition about the latest
# smoothed iterate and the measurement about the latest posterior iterate.
# Iteration 0 is the non-iterated baseline (EKF for DIEKF, UKF for DIUKF/DIPLF).

import enum
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .constants import ALG_EKF, ALG_UKF, DEFAULT_MAX_ITERS, DEFAULT_TOL
from .exceptions import DimensionError, NumericalError
from .filters import (StepResult, ekf_step, kf_predict, kf_update, rts_joint,
                      rts_smooth_step, ukf_step)
from .gaussian import Gaussian
from .slr import (AffineModel, SigmaConfig, analytic_linearize, resolve_sigma,
                  slr_linearize)
from .ssm import StateSpaceModel


class Variant(str, enum.Enum):
    DIEKF = 'DIEKF'
    DIUKF = 'DIUKF'
    DIPLF = 'DIPLF'

    @property
    def baseline(self) -> 'Baseline':
        return Baseline.EKF if self is Variant.DIEKF else Baseline.UKF


class Baseline(str, enum.Enum):
    EKF = ALG_EKF
    UKF = ALG_UKF


@dataclass(frozen=True)
class DifConfig:
    """
    max_iters counts linearization passes including iteration 0, so max_iters = 1
    reproduces the baseline filter. sigma = None selects the default tuning for the
    state dimension.
    """

    variant: Variant = Variant.DIEKF
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    sigma: Optional[SigmaConfig] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'variant', Variant(self.variant))
        if int(self.max_iters) < 1:
            raise ValueError(f'max_iters must be at least 1, got {self.max_iters}')
        if not self.tol > 0:
            raise ValueError(f'tol must be positive, got {self.tol}')


@dataclass(frozen=True)
class IterationRecord:
    smoothed_prev: Gaussian
    predicted: Gaussian
    posterior: Gaussian
    transition: AffineModel
    measurement: AffineModel


@dataclass
class IterationTrace:
    iterations: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    failed: bool = False
    failure: Optional[str] = None
    # Frobenius norm of the posterior covariance change, one entry per iteration >= 1
    cov_changes: List[float] = field(default_factory=list)

    @property
    def iterations_used(self) -> int:
        return len(self.iterations) - 1


class DifStep(NamedTuple):
    posterior: Gaussian
    smoothed_prev: Gaussian
    trace: IterationTrace


def _linearize(variant: Variant, f: Callable, jacobian: Optional[Callable], q: Gaussian,
               sigma: SigmaConfig, out_dim: int) -> AffineModel:
    if variant is Variant.DIEKF:
        return analytic_linearize(f, jacobian, q, out_dim=out_dim)
    return slr_linearize(f, q, sigma)


def _transition_expansion(variant: Variant, prior_prev: Gaussian, smoothed: Optional[Gaussian]) -> Gaussian:
    if smoothed is None:
        return prior_prev
    if variant is Variant.DIUKF:
        # mean-only relinearization: keep the spread of the prior leg
        return Gaussian(smoothed.mean, prior_prev.cov)
    return smoothed


def _measurement_expansion(variant: Variant, predicted: Gaussian, posterior: Optional[Gaussian]) -> Gaussian:
    if posterior is None:
        return predicted
    if variant is Variant.DIUKF:
        return Gaussian(posterior.mean, predicted.cov)
    return posterior


def _iterate(prior_prev: Gaussian, model: StateSpaceModel, y: np.ndarray, variant: Variant,
             sigma: SigmaConfig, smoothed: Optional[Gaussian], posterior: Optional[Gaussian]) -> IterationRecord:
    m_f = _linearize(variant, model.f, model.f_jacobian,
                     _transition_expansion(variant, prior_prev, smoothed), sigma, model.state_dim)
    predicted = kf_predict(prior_prev, m_f, model.Q)
    m_h = _linearize(variant, model.h, model.h_jacobian,
                     _measurement_expansion(variant, predicted, posterior), sigma, model.meas_dim)
    new_posterior = kf_update(predicted, m_h, model.R, y)
    new_smoothed = rts_smooth_step(prior_prev, predicted, new_posterior, m_f)
    return IterationRecord(new_smoothed, predicted, new_posterior, m_f, m_h)


def dif_step(prior_prev: Gaussian, model: StateSpaceModel, y: np.ndarray,
             cfg: Optional[DifConfig] = None) -> DifStep:
    """
    One time step of the dynamically iterated filter.

    Stops after cfg.max_iters passes or when the posterior mean moves by at most
    tol * (1 + |previous mean|). A numerical failure after iteration 0 ends the loop and
    returns the last valid iterate with trace.failed set; a failure in iteration 0 raises.
    """
    cfg = cfg or DifConfig()
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (model.meas_dim,):
        raise DimensionError(f'Measurement has shape {y.shape}, model expects ({model.meas_dim},)')
    if prior_prev.dim != model.state_dim:
        raise DimensionError(f'Prior has dimension {prior_prev.dim}, model expects {model.state_dim}')
    if cfg.variant is Variant.DIEKF and not model.has_jacobians:
        raise ValueError(f'DIEKF needs analytic Jacobians, model "{model.name}" has none')
    sigma = resolve_sigma(cfg.sigma, model.state_dim)

    trace = IterationTrace()
    smoothed = posterior = None
    for _ in range(cfg.max_iters):
        try:
            record = _iterate(prior_prev, model, y, cfg.variant, sigma, smoothed, posterior)
        except NumericalError as e:
            if not trace.iterations:
                raise
            trace.failed = True
            trace.failure = str(e)
            break
        trace.iterations.append(record)
        previous = posterior
        smoothed, posterior = record.smoothed_prev, record.posterior
        if previous is None:
            continue
        trace.cov_changes.append(float(np.linalg.norm(posterior.cov - previous.cov)))
        step = float(np.linalg.norm(posterior.mean - previous.mean))
        if step <= cfg.tol * (1.0 + float(np.linalg.norm(previous.mean))):
            trace.converged = True
            break

    last = trace.iterations[-1]
    return DifStep(last.posterior, last.smoothed_prev, trace)


def iteration_joint(prior_prev: Gaussian, record: IterationRecord) -> Gaussian:
    """ Gaussian joint of (x_{k-1}, x_k) given y_{1:k} at one iteration """
    return rts_joint(prior_prev, record.predicted, record.posterior, record.transition)


@dataclass
class FilterRun:
    posteriors: List[Gaussian]
    traces: List[Optional[IterationTrace]]
    failed_steps: List[int]

    @property
    def means(self) -> np.ndarray:
        return np.vstack([p.mean for p in self.posteriors])

    @property
    def failed(self) -> bool:
        return bool(self.failed_steps)


def as_measurements(ys: Union[np.ndarray, Sequence], meas_dim: int) -> np.ndarray:
    ys = np.asarray(ys, dtype=float)
    if ys.ndim == 1 and meas_dim == 1:
        ys = ys[:, None]
    if ys.ndim != 2 or ys.shape[1] != meas_dim:
        raise DimensionError(f'Measurements must have shape (K, {meas_dim}), got {ys.shape}')
    if ys.shape[0] == 0:
        raise ValueError('Measurement sequence is empty')
    return ys


def dif_filter(prior0: Gaussian, model: StateSpaceModel, ys: Union[np.ndarray, Sequence],
               cfg: Optional[DifConfig] = None) -> FilterRun:
    """
    Runs dif_step over the sequence; the time-k posterior is the prior of step k + 1.
    A step that fails outright keeps the previous posterior as its estimate and is listed
    in failed_steps; steps recovered after iteration 0 are only flagged in their trace.
    """
    cfg = cfg or DifConfig()
    run = FilterRun([], [], [])
    current = prior0
    for k, y in enumerate(as_measurements(ys, model.meas_dim)):
        try:
            step = dif_step(current, model, y, cfg)
        except NumericalError:
            run.failed_steps.append(k)
            run.traces.append(None)
        else:
            current = step.posterior
            run.traces.append(step.trace)
        run.posteriors.append(current)
    return run


def baseline_filter(prior0: Gaussian, model: StateSpaceModel, ys: Union[np.ndarray, Sequence],
                    which: Union[Baseline, str] = Baseline.EKF, cfg: Optional[SigmaConfig] = None) -> FilterRun:
    which = Baseline(which)
    step_fn: Callable[[Gaussian, np.ndarray], StepResult]
    if which is Baseline.EKF:
        def step_fn(prior, y):
            return ekf_step(prior, model, y)
    else:
        def step_fn(prior, y):
            return ukf_step(prior, model, y, cfg)

    run = FilterRun([], [], [])
    current = prior0
    for k, y in enumerate(as_measurements(ys, model.meas_dim)):
        try:
            current = step_fn(current, y).posterior
        except NumericalError:
            run.failed_steps.append(k)
        run.traces.append(None)
        run.posteriors.append(current)
    return run
