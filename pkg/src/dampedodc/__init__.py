"""Structured (decentralized) LQR with a damping parameter.

The cost of a structured static gain ``K`` at damping ``alpha`` is the LQR
cost of the shifted plant ``A - alpha I``. Raising ``alpha`` enlarges the
stabilizing set and lowers every cost, so local optima can be followed
from a heavily damped, benign landscape down to the original problem.

Modules
-------
linalg
    Lyapunov solvers, Kronecker helpers, stability tests.
objective
    Problem instances, cost, gradient and Hessian.
local_search
    Projected gradient descent and multi-start.
continuation
    Damping schedules and trajectory tracking.
theory
    Numerical probes of the structural results.
experiments, cli
    Built-in instances, configured runs and file output.
"""

__version__ = '0.1.0'

from .exceptions import *  # noqa: E402,F401,F403
from .linalg import (commutation_matrix, is_stable, routh_hurwitz,  # noqa: E402
                     solve_lyapunov_ctrl, solve_lyapunov_obs,
                     spectral_abscissa, stability_report)
from .objective import (ProblemInstance, closed_loop, cost, evaluate,  # noqa: E402
                        gradient, hessian, is_stabilizing, lyapunov_pair,
                        project, projected_gradient, projected_hessian,
                        stationarity_residual)
from .local_search import (LineSearchParams, LocalSolution,  # noqa: E402
                           SolverConfig, armijo_step, deduplicate, minimize,
                           multi_start)
from .continuation import (DampingSchedule, Trajectory,  # noqa: E402
                           TrajectoryBundle, anneal_from_damped, hysteresis,
                           improve_by_damping, track, track_bundle)
from .theory import (check_covariance_bounds, check_asymptotic_zero,  # noqa: E402
                     check_damping_property, check_hessian_pd,
                     disconnected_t_set, stable_direction_counterexample)
