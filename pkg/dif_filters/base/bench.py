# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Monte Carlo harness for the coordinated-turn tracking sweep.
#
# Every random draw comes from np.random.default_rng([master_seed, tag, config, trajectory(, target)]),
# so a dataset depends only on its indices, never on execution order or worker count.

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import (ALG_EKF, ALG_UKF, ALGORITHM_PAIRS, ALL_ALGORITHMS,
                        DEFAULT_K, DEFAULT_MASTER_SEED, DEFAULT_N_TARGETS,
                        DEFAULT_N_TRAJECTORIES, DEFAULT_Q1_GRID, DEFAULT_Q2,
                        DEFAULT_SIGMA2_GRID, DEFAULT_T, POSITION_INDICES,
                        TAG_MEASUREMENT, TAG_PRIOR, TAG_PROCESS,
                        VELOCITY_INDICES)
from .dif import (Baseline, DifConfig, FilterRun, Variant, baseline_filter,
                  dif_filter)
from .exceptions import DifError
from .gaussian import Gaussian
from .report import ReportRow
from .ssm import CT_H, CtParams, StateSpaceModel, ct_model, ct_prior


@dataclass(frozen=True)
class SweepSpec:
    q1_grid: Tuple[float, ...] = DEFAULT_Q1_GRID
    sigma2_grid: Tuple[float, ...] = DEFAULT_SIGMA2_GRID
    q2: float = DEFAULT_Q2
    T: float = DEFAULT_T
    n_trajectories: int = DEFAULT_N_TRAJECTORIES
    n_targets_per_trajectory: int = DEFAULT_N_TARGETS
    K: int = DEFAULT_K
    master_seed: int = DEFAULT_MASTER_SEED

    def __post_init__(self) -> None:
        object.__setattr__(self, 'q1_grid', tuple(float(q) for q in self.q1_grid))
        object.__setattr__(self, 'sigma2_grid', tuple(float(s) for s in self.sigma2_grid))
        if not self.q1_grid or not self.sigma2_grid:
            raise ValueError('q1_grid and sigma2_grid must not be empty')
        for label in ('n_trajectories', 'n_targets_per_trajectory', 'K'):
            if int(getattr(self, label)) < 1:
                raise ValueError(f'{label} must be at least 1, got {getattr(self, label)}')
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError(f'master_seed must be a 64-bit unsigned integer, got {self.master_seed}')
        # raises for non-positive grid values or q2/T
        self.configs()

    @property
    def n_configs(self) -> int:
        return len(self.q1_grid) * len(self.sigma2_grid)

    def configs(self) -> List[Tuple[int, CtParams]]:
        """ (config_index, params) with q1 as the outer loop """
        out = []
        for i, q1 in enumerate(self.q1_grid):
            for j, sigma2 in enumerate(self.sigma2_grid):
                out.append((i * len(self.sigma2_grid) + j, CtParams(q1=q1, sigma2=sigma2, q2=self.q2, T=self.T)))
        return out


def stream(master_seed: int, tag: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(tag), *(int(i) for i in indices)])


@dataclass(frozen=True)
class Dataset:
    params: CtParams
    config_index: int
    truths: np.ndarray  # (n_trajectories, K + 1, 5), row 0 is x_0
    measurements: np.ndarray  # (n_trajectories, n_targets, K, 2), measurement k + 1 at [.., k, :]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.measurements).tobytes()).hexdigest()


def simulate_trajectory(model: StateSpaceModel, prior: Gaussian, K: int, master_seed: int,
                        config_index: int, traj: int) -> np.ndarray:
    x = prior.sample(stream(master_seed, TAG_PRIOR, config_index, traj))
    noise = Gaussian(np.zeros(model.state_dim), model.Q).sample(stream(master_seed, TAG_PROCESS, config_index, traj), K)
    truth = np.empty((K + 1, model.state_dim))
    truth[0] = x
    for k in range(K):
        x = model.f(x) + noise[k]
        truth[k + 1] = x
    return truth


def simulate(config: CtParams, spec: SweepSpec, config_index: int) -> Dataset:
    """
    Trajectories differ per configuration; the targets of one trajectory share it and
    differ only in their measurement noise.
    """
    model = ct_model(config)
    prior = ct_prior()
    zeros = np.zeros(model.meas_dim)
    truths = np.empty((spec.n_trajectories, spec.K + 1, model.state_dim))
    measurements = np.empty((spec.n_trajectories, spec.n_targets_per_trajectory, spec.K, model.meas_dim))
    for t in range(spec.n_trajectories):
        truths[t] = simulate_trajectory(model, prior, spec.K, spec.master_seed, config_index, t)
        clean = truths[t, 1:] @ CT_H.T
        for m in range(spec.n_targets_per_trajectory):
            rng = stream(spec.master_seed, TAG_MEASUREMENT, config_index, t, m)
            measurements[t, m] = clean + Gaussian(zeros, model.R).sample(rng, spec.K)
    return Dataset(config, config_index, truths, measurements)


def rmse(errors: np.ndarray, components: Sequence[int]) -> float:
    """
    Root of the mean, over every leading index (runs, time), of the squared Euclidean
    norm of the selected components of the trailing axis.
    """
    e = np.asarray(errors, dtype=float)[..., list(components)]
    if e.size == 0:
        raise ValueError('rmse needs a nonempty error set')
    return float(np.sqrt(np.mean(np.sum(e ** 2, axis=-1))))


def relative_rmse(iterated: float, base: float) -> float:
    if base < 0 or iterated < 0:
        raise ValueError('RMSE values must be nonnegative')
    if base == 0:
        return 1.0 if iterated == 0 else math.inf
    return iterated / base


def divergence_flag(pos_rmse: float, sigma2: float, n_axes: int = 1) -> bool:
    """
    True when pos_rmse exceeds what the raw measurements alone score. For the Euclidean
    error over n_axes position axes with noise sigma2 I that level is sqrt(n_axes * sigma2).
    """
    if not sigma2 > 0:
        raise ValueError(f'sigma2 must be positive, got {sigma2}')
    if n_axes < 1:
        raise ValueError(f'n_axes must be at least 1, got {n_axes}')
    if not math.isfinite(pos_rmse):
        return True
    return pos_rmse > math.sqrt(n_axes * sigma2)


def run_algorithm(name: str, prior: Gaussian, model: StateSpaceModel, ys: np.ndarray,
                  dif_cfg: Optional[DifConfig] = None) -> FilterRun:
    dif_cfg = dif_cfg or DifConfig()
    if name in (ALG_EKF, ALG_UKF):
        return baseline_filter(prior, model, ys, Baseline(name), dif_cfg.sigma)
    return dif_filter(prior, model, ys, replace(dif_cfg, variant=Variant(name)))


@dataclass
class AlgorithmResult:
    algorithm: str
    pos_rmse: float
    vel_rmse: float
    diverged: bool
    failed_runs: int
    # one entry per trajectory, pooled over its targets and time steps
    partial_pos_rmse: List[float] = field(default_factory=list)
    partial_vel_rmse: List[float] = field(default_factory=list)
    digest: str = ''


@dataclass
class ConfigResult:
    config_index: int
    params: CtParams
    digest: str
    results: Dict[str, AlgorithmResult]


def _squared(errors: np.ndarray, components: Sequence[int]) -> np.ndarray:
    return np.sum(errors[..., list(components)] ** 2, axis=-1)


def _pooled(chunks: List[np.ndarray]) -> float:
    if not chunks:
        return math.inf
    return float(np.sqrt(np.mean(np.concatenate([c.ravel() for c in chunks]))))


def evaluate_algorithm(name: str, data: Dataset, model: StateSpaceModel, prior: Gaussian,
                       dif_cfg: Optional[DifConfig] = None) -> AlgorithmResult:
    """
    Runs one algorithm on every (trajectory, target) of the dataset. Squared errors of the
    filtered means are pooled over runs and time. A run with failed steps or that raises
    marks the algorithm as diverged; estimates of runs with failed steps still count.
    """
    digest = hashlib.sha256()
    pos_all, vel_all = [], []  # type: Tuple[List[np.ndarray], List[np.ndarray]]
    partial_pos, partial_vel = [], []
    failed_runs = 0
    for t, truth in enumerate(data.truths):
        pos_t, vel_t = [], []
        for ys in data.measurements[t]:
            digest.update(np.ascontiguousarray(ys).tobytes())
            try:
                run = run_algorithm(name, prior, model, ys, dif_cfg)
            except (DifError, ValueError, FloatingPointError, np.linalg.LinAlgError):
                failed_runs += 1
                continue
            failed_runs += int(run.failed)
            errors = run.means - truth[1:]
            pos_t.append(_squared(errors, POSITION_INDICES))
            vel_t.append(_squared(errors, VELOCITY_INDICES))
        partial_pos.append(_pooled(pos_t))
        partial_vel.append(_pooled(vel_t))
        pos_all += pos_t
        vel_all += vel_t

    pos_rmse, vel_rmse = _pooled(pos_all), _pooled(vel_all)
    diverged = failed_runs > 0 or divergence_flag(pos_rmse, data.params.sigma2, len(POSITION_INDICES))
    return AlgorithmResult(name, pos_rmse, vel_rmse, diverged, failed_runs,
                           partial_pos, partial_vel, digest.hexdigest())


def run_config(spec: SweepSpec, config_index: int, params: CtParams, algorithms: Sequence[str],
               dif_cfg: Optional[DifConfig] = None) -> ConfigResult:
    # the model holds closures, so every worker builds its own
    model = ct_model(params)
    prior = ct_prior()
    data = simulate(params, spec, config_index)
    results = {alg: evaluate_algorithm(alg, data, model, prior, dif_cfg) for alg in algorithms}
    return ConfigResult(config_index, params, data.digest(), results)


def _run_config_job(job: Tuple[SweepSpec, int, CtParams, Tuple[str, ...], Optional[DifConfig]]) -> ConfigResult:
    return run_config(*job)


@dataclass
class RmseReport:
    spec: SweepSpec
    algorithms: Tuple[str, ...]
    configs: List[ConfigResult]

    def result(self, config_index: int, algorithm: str) -> AlgorithmResult:
        return self.configs[config_index].results[algorithm]

    def pairs(self) -> List[Tuple[str, str]]:
        return [(it, base) for it, base in ALGORITHM_PAIRS if it in self.algorithms and base in self.algorithms]

    def relative(self, config_index: int, iterated: str) -> Tuple[float, float]:
        base = dict(ALGORITHM_PAIRS)[iterated]
        it_res, base_res = self.result(config_index, iterated), self.result(config_index, base)
        return (relative_rmse(it_res.pos_rmse, base_res.pos_rmse),
                relative_rmse(it_res.vel_rmse, base_res.vel_rmse))

    def rows(self) -> List[ReportRow]:
        pairs = dict(self.pairs())
        out = []
        for cfg in self.configs:
            for alg in self.algorithms:
                res = cfg.results[alg]
                v_pos = v_vel = None
                if alg in pairs:
                    v_pos, v_vel = self.relative(cfg.config_index, alg)
                out.append(ReportRow(cfg.params.q1, cfg.params.sigma2, alg, res.pos_rmse, res.vel_rmse,
                                     res.diverged, v_pos, v_vel))
        return out

    def divergence_counts(self) -> Dict[str, int]:
        return {alg: sum(int(cfg.results[alg].diverged) for cfg in self.configs) for alg in self.algorithms}


def normalize_algorithms(algorithms: Optional[Sequence[str]]) -> Tuple[str, ...]:
    """ Validates names and returns them in canonical order """
    if algorithms is None:
        return ALL_ALGORITHMS
    requested = {a.strip().upper() for a in algorithms if a.strip()}
    unknown = sorted(requested - set(ALL_ALGORITHMS))
    if unknown:
        raise ValueError(f'Unknown algorithm(s) {", ".join(unknown)}; choose from {", ".join(ALL_ALGORITHMS)}')
    if not requested:
        raise ValueError('No algorithm selected')
    return tuple(a for a in ALL_ALGORITHMS if a in requested)


def run_sweep(spec: SweepSpec, algorithms: Optional[Sequence[str]] = None, dif_cfg: Optional[DifConfig] = None,
              workers: int = 1, progress: Optional[Callable[[ConfigResult], None]] = None) -> RmseReport:
    """
    Runs every configuration of the sweep. With workers > 1 configurations are spread over
    a process pool; results are collected in configuration-index order either way.
    """
    algs = normalize_algorithms(algorithms)
    if workers < 1:
        raise ValueError(f'workers must be at least 1, got {workers}')
    jobs = [(spec, index, params, algs, dif_cfg) for index, params in spec.configs()]

    results = []  # type: List[ConfigResult]
    if workers == 1 or len(jobs) == 1:
        for job in jobs:
            results.append(_run_config_job(job))
            if progress:
                progress(results[-1])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_config_job, jobs):
                results.append(res)
                if progress:
                    progress(res)
    return RmseReport(spec, algs, results)


def example_trajectories(spec: SweepSpec, config_index: int, n: int) -> Dataset:
    """ The first n trajectories of one configuration with one measurement realization each """
    params = dict(spec.configs())[config_index]
    reduced = replace(spec, n_trajectories=min(n, spec.n_trajectories), n_targets_per_trajectory=1)
    return simulate(params, reduced, config_index)
