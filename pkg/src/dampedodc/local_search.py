"""Projected gradient descent with Armijo backtracking, and multi-start.

The search direction at ``K`` is the negative gradient with the fixed
entries zeroed. A trial step is rejected both when the closed loop loses
stability and when the Armijo decrease condition fails.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (InstabilityError, LineSearchStall,
                         PreconditionError)
from .linalg import DEFAULT_STABILITY_TOL
from .objective import evaluate, is_stabilizing, projected_hessian

logger = logging.getLogger(__name__)

__all__ = ['LineSearchParams', 'SolverConfig', 'LocalSolution',
           'armijo_step', 'minimize', 'multi_start', 'deduplicate', 'sample_gains',
           'CONVERGED', 'ITERATION_CAP', 'LINE_SEARCH_STALL']

CONVERGED = 'converged'
ITERATION_CAP = 'iteration_cap'
LINE_SEARCH_STALL = 'line_search_stall'


@dataclass(frozen=True)
class LineSearchParams:
    """Backtracking parameters.

    Trial steps are ``initial_step * shrink**k`` for k = 0, 1, ...,
    ``max_backtracks``.
    """
    armijo_c: float = 1e-3
    shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0 < self.armijo_c < 1:
            raise PreconditionError("armijo_c must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise PreconditionError("shrink must lie in (0, 1)")
        if not self.initial_step > 0:
            raise PreconditionError("initial_step must be positive")
        if self.max_backtracks < 0:
            raise PreconditionError("max_backtracks must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    line_search: LineSearchParams = field(default_factory=LineSearchParams)
    grad_tol: float = 1e-3
    max_iters: int = 100_000
    stability_tol: float = DEFAULT_STABILITY_TOL

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise PreconditionError("grad_tol must be positive")
        if self.max_iters < 0:
            raise PreconditionError("max_iters must be nonnegative")

    def scaled(self, alpha):
        """Config adapted to heavy damping.

        At large ``alpha`` the cost, gradient and curvature all shrink like
        ``1/alpha``. Multiplying the first trial step and dividing the
        gradient tolerance by ``max(1, alpha)`` keeps the iteration count
        and the distance-to-optimum at termination roughly alpha-independent.
        """
        s = max(1.0, float(alpha))
        ls = replace(self.line_search,
                     initial_step=self.line_search.initial_step * s)
        return replace(self, line_search=ls, grad_tol=self.grad_tol / s)


@dataclass(frozen=True)
class LocalSolution:
    K: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    status: str
    alpha: float = 0.0

    @property
    def converged(self):
        return self.status == CONVERGED


def _backtrack(inst, K, direction, alpha, params, J0, slope, tol):
    s = params.initial_step
    for _ in range(params.max_backtracks + 1):
        Kt = K + s * direction
        try:
            Jt, _ = evaluate(inst, Kt, alpha, tol, grad=False)
        except InstabilityError:
            s *= params.shrink
            continue
        if Jt < J0 + params.armijo_c * s * slope:
            return s, Kt, Jt
        s *= params.shrink
    raise LineSearchStall(
        f"no acceptable step after {params.max_backtracks} backtracks")


def armijo_step(inst, K, direction, alpha=0.0, params=None,
                tol=DEFAULT_STABILITY_TOL):
    """Largest step ``s`` in ``{s0, s0*b, s0*b**2, ...}`` with ``K + s*dir``
    stabilizing and satisfying the Armijo decrease condition.

    `direction` must respect the mask and be a descent direction.

    Raises
    ------
    LineSearchStall
        When ``params.max_backtracks`` halvings do not produce a step.
    """
    params = LineSearchParams() if params is None else params
    K = np.asarray(K, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if np.any(direction * (1 - inst.mask) != 0):
        raise PreconditionError("direction has entries outside the mask")
    J0, G0 = evaluate(inst, K, alpha, tol)
    slope = float(np.sum(G0 * direction))
    if not slope < 0:
        raise PreconditionError("direction is not a descent direction")
    return _backtrack(inst, K, direction, alpha, params, J0, slope, tol)[0]


def minimize(inst, K0, alpha=0.0, cfg=None):
    """Projected gradient descent from `K0` at damping `alpha`.

    Stops when the Frobenius norm of the projected gradient drops to
    ``cfg.grad_tol`` (status 'converged'), after ``cfg.max_iters`` steps
    ('iteration_cap'), or when the line search stalls ('line_search_stall').
    The cost decreases strictly at every accepted step.

    Raises
    ------
    PreconditionError
        If `K0` violates the mask or does not stabilize the damped plant.
    """
    cfg = SolverConfig() if cfg is None else cfg
    K = np.array(K0, dtype=float)
    if K.shape != (inst.m, inst.n):
        raise PreconditionError(f"K0 must be {inst.m}x{inst.n}")
    if np.any(K * (1 - inst.mask) != 0):
        raise PreconditionError("K0 has nonzero entries outside the mask")
    tol = cfg.stability_tol
    try:
        J, G = evaluate(inst, K, alpha, tol)
    except InstabilityError as exc:
        raise PreconditionError(f"K0 is not stabilizing: {exc}") from exc
    params = cfg.line_search
    status = ITERATION_CAP
    it = 0
    gnorm = float(np.linalg.norm(G))
    while True:
        if gnorm <= cfg.grad_tol:
            status = CONVERGED
            break
        if it >= cfg.max_iters:
            break
        try:
            _, K, J = _backtrack(inst, K, -G, alpha, params, J,
                                 -gnorm ** 2, tol)
        except LineSearchStall:
            status = LINE_SEARCH_STALL
            break
        it += 1
        J, G = evaluate(inst, K, alpha, tol)
        gnorm = float(np.linalg.norm(G))
    K.flags.writeable = False
    return LocalSolution(K, J, gnorm, it, status, float(alpha))


def _sort_key(sol):
    return (sol.cost, tuple(sol.K.ravel()))


def deduplicate(solutions, dedup_tol=1e-2, cost_rtol=1e-4):
    """Cluster solutions and keep the lowest-cost member of each cluster.

    Two solutions fall in one cluster when their gains are within `dedup_tol`
    in Frobenius norm, or when their costs agree to `cost_rtol` relative and
    the gains are within ``10 * dedup_tol``. The result is ordered by cost,
    ties broken lexicographically on K, independent of input order.
    """
    reps = []
    for sol in sorted(solutions, key=_sort_key):
        for rep in reps:
            dist = np.linalg.norm(sol.K - rep.K)
            gap = abs(sol.cost - rep.cost) / max(abs(rep.cost), 1e-300)
            if dist <= dedup_tol or (gap <= cost_rtol
                                     and dist <= 10 * dedup_tol):
                break
        else:
            reps.append(sol)
    return reps


def sample_gains(inst, n_samples, rng):
    """Draw gains with i.i.d. standard normal free entries."""
    idx = np.flatnonzero(inst.mask.ravel())
    out = []
    for _ in range(n_samples):
        K = np.zeros(inst.m * inst.n)
        K[idx] = rng.standard_normal(idx.size)
        out.append(K.reshape(inst.m, inst.n))
    return out


def multi_start(inst, alpha=0.0, n_samples=100, rng_seed=0, cfg=None,
                dedup_tol=1e-2, cost_rtol=1e-4, check_hessian=False):
    """Minimize from random gains and return the distinct local optima.

    Gains are sampled with ``numpy.random.default_rng(rng_seed)`` (PCG64).
    Non-stabilizing samples are discarded and only runs that converge are
    kept. Returns the deduplicated solutions sorted by cost; an empty list
    (with a logged warning) when no sample stabilizes.

    With `check_hessian`, each representative's projected Hessian is
    screened for eigenvalues below -1e-4 and violations are logged.
    """
    if n_samples < 1:
        raise PreconditionError("n_samples must be at least 1")
    cfg = SolverConfig() if cfg is None else cfg
    rng = np.random.default_rng(rng_seed)
    found = []
    n_stab = 0
    for K0 in sample_gains(inst, n_samples, rng):
        if not is_stabilizing(inst, K0, alpha, cfg.stability_tol):
            continue
        n_stab += 1
        sol = minimize(inst, K0, alpha, cfg)
        if sol.converged:
            found.append(sol)
    if n_stab == 0:
        logger.warning("multi_start: none of %d samples stabilizes the "
                       "plant at alpha=%g", n_samples, alpha)
    elif not found:
        logger.warning("multi_start: %d stabilizing samples, none converged",
                       n_stab)
    reps = deduplicate(found, dedup_tol, cost_rtol)
    if check_hessian:
        for sol in reps:
            lam = np.linalg.eigvalsh(projected_hessian(inst, sol.K, alpha)).min()
            if lam < -1e-4:
                logger.warning("converged point with indefinite projected "
                               "Hessian (min eig %.3e), cost %.6g", lam,
                               sol.cost)
    return reps
