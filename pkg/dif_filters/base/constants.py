# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0

import math

# Gaussian invariants
SYMMETRY_RTOL = 1e-12
PSD_EIG_RTOL = 1e-10  # smallest eigenvalue may reach -PSD_EIG_RTOL * trace

# chol_psd jitter escalation
JITTER_START = 1e-12  # times trace(P) / d
JITTER_GROWTH = 100.0
JITTER_RETRIES = 3

# below this turn rate the coordinated-turn entries use their series limits
OMEGA_EPS = 1e-9
TURN_SERIES_EPS = 1e-4  # |T w| below which turn-term derivatives use their series

# Illustrative cubic model
CUBIC_A = 0.01
CUBIC_Q = 0.1
CUBIC_R = 0.1
CUBIC_PRIOR_MEAN = 3.0
CUBIC_PRIOR_VAR = 4.0

# Coordinated-turn tracking experiment
CT_PRIOR_MEAN = (130.0, 35.0, -20.0, -20.0, -4.0 * math.pi / 180.0)
CT_PRIOR_VAR = (5.0, 5.0, 5.0, 5.0, 1e-2)
DEFAULT_Q1_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_SIGMA2_GRID = (1e-2, 1e-1, 1.0, 1e1, 1e2)
DEFAULT_Q2 = 1e-2
DEFAULT_T = 1.0
DEFAULT_N_TRAJECTORIES = 20
DEFAULT_N_TARGETS = 10
DEFAULT_K = 130
DEFAULT_MASTER_SEED = 0

# state layout (px, vx, py, vy, omega)
POSITION_INDICES = (0, 2)
VELOCITY_INDICES = (1, 3)

# Dynamically iterated filter defaults
DEFAULT_MAX_ITERS = 10
DEFAULT_TOL = 1e-6

# Algorithm names
ALG_EKF = 'EKF'
ALG_UKF = 'UKF'
ALG_DIEKF = 'DIEKF'
ALG_DIUKF = 'DIUKF'
ALG_DIPLF = 'DIPLF'
ALL_ALGORITHMS = (ALG_EKF, ALG_UKF, ALG_DIEKF, ALG_DIUKF, ALG_DIPLF)
# iterated filter -> its non-iterated baseline
ALGORITHM_PAIRS = ((ALG_DIEKF, ALG_EKF), (ALG_DIUKF, ALG_UKF), (ALG_DIPLF, ALG_UKF))

# Tags of the counter-based random streams
TAG_PRIOR = 0
TAG_PROCESS = 1
TAG_MEASUREMENT = 2
TAG_ILLUSTRATE = 3

# Grid oracle
GRID_POINTS = 2001
GRID_HALF_WIDTH = 10.0  # in pilot standard deviations
GRID_BOUNDARY_MASS = 1e-6
GRID_BOUNDARY_FRACTION = 0.01  # share of the grid at each end used to measure boundary mass
GRID_NORMALIZATION_TOL = 1e-6

# Illustration defaults
DEFAULT_ILLUSTRATE_ITERS = 3
DEFAULT_ILLUSTRATE_SEED = 0
ILLUSTRATE_TOL = 1e-15
ILLUSTRATE_BAND = 1.96  # half-width, in EKF predictive standard deviations
ILLUSTRATE_MAX_DRAWS = 10000

# Report files
REPORT_FILENAME = 'report.csv'
LOG_FILENAME = 'track.log'
TRAJECTORIES_FILENAME = 'trajectories.csv'
REPORT_HEADER = ('q1', 'sigma2', 'algorithm', 'pos_rmse', 'vel_rmse', 'diverged', 'V_pos', 'V_vel')
DIVERGED_MARK = '−'

DEFAULT_TIMESTAMP_FORMAT = '%Y-%m-%d %H:%M:%S'
DEFAULT_OUT_DIR = 'dif_output'
