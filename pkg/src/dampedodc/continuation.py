"""Tracking local optima as the damping level changes.

A trajectory follows one local optimum along a damping schedule: at each
new ``alpha`` the local search is warm-started from the previous optimum.
A bundle tracks several trajectories in lock step and identifies
trajectories that run into each other.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import PreconditionError
from .local_search import SolverConfig, minimize, multi_start
from .objective import cost as _cost
from .objective import is_stabilizing

logger = logging.getLogger(__name__)

__all__ = ['DampingSchedule', 'TrajectoryPoint', 'Trajectory',
           'MergeEvent', 'TrajectoryBundle', 'track', 'track_bundle',
           'hysteresis', 'improve_by_damping', 'anneal_from_damped',
           'ImprovementResult', 'AnnealResult', 'ALIVE', 'LOST', 'MERGED']

ALIVE = 'alive'
LOST = 'lost'
MERGED = 'merged'

_DIRECTIONS = ('increasing', 'decreasing', 'up_then_down', 'down_then_up',
               'constant')


def _grid(start, stop, step):
    step = abs(step)
    if step == 0:
        raise PreconditionError("schedule step must be nonzero")
    k = int(round(abs(stop - start) / step))
    sign = 1.0 if stop >= start else -1.0
    pts = np.round(start + sign * step * np.arange(k + 1), 12)
    pts[-1] = stop
    return [float(a) for a in pts]


@dataclass(frozen=True)
class DampingSchedule:
    """Ordered damping values plus a label for the sweep shape.

    Repeated consecutive values are allowed; they re-solve at the same
    damping level, which is a fixed point of the warm start.
    """
    alphas: tuple
    direction: str

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise PreconditionError("schedule must be nonempty")
        if not all(np.isfinite(alphas)) or min(alphas) < 0:
            raise PreconditionError("damping values must be finite and >= 0")
        if self.direction not in _DIRECTIONS:
            raise PreconditionError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, 'alphas', alphas)

    def __len__(self):
        return len(self.alphas)

    def __iter__(self):
        return iter(self.alphas)

    @classmethod
    def linear(cls, start, stop, step):
        if start == stop:
            return cls((start,), 'constant')
        return cls(_grid(start, stop, step),
                   'increasing' if stop > start else 'decreasing')

    @classmethod
    def up_then_down(cls, start, peak, step):
        if peak < start:
            raise PreconditionError("peak must not be below start")
        if peak == start:
            return cls((start, start), 'constant')
        up = _grid(start, peak, step)
        return cls(up + up[-2::-1], 'up_then_down')

    @classmethod
    def down_then_up(cls, start, trough, step):
        if trough > start:
            raise PreconditionError("trough must not be above start")
        if trough == start:
            return cls((start, start), 'constant')
        down = _grid(start, trough, step)
        return cls(down + down[-2::-1], 'down_then_up')


@dataclass(frozen=True)
class TrajectoryPoint:
    alpha: float
    K: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    dist_to_best: float = float('nan')
    step: int = 0


@dataclass
class Trajectory:
    id: int
    points: list = field(default_factory=list)
    status: str = ALIVE
    merged_into: int = None
    end_alpha: float = None

    @property
    def alphas(self):
        return np.array([p.alpha for p in self.points])

    @property
    def costs(self):
        return np.array([p.cost for p in self.points])

    @property
    def last(self):
        return self.points[-1]


@dataclass(frozen=True)
class MergeEvent:
    alpha: float
    survivor: int
    absorbed: int


@dataclass
class TrajectoryBundle:
    trajectories: list
    merge_events: list
    best_per_step: list
    schedule: DampingSchedule = None

    @property
    def best_id_per_alpha(self):
        return {a: tid for a, tid in self.best_per_step}

    def alive(self):
        return [t for t in self.trajectories if t.status == ALIVE]

    def point(self, traj_id, step):
        for p in self.trajectories[traj_id].points:
            if p.step == step:
                return p
        return None

    def best_cost_per_alpha(self):
        """(alphas, costs) of the lowest-cost tracked point at each step."""
        alphas = np.array([a for a, _ in self.best_per_step])
        costs = np.array([self.point(tid, k).cost
                          for k, (_, tid) in enumerate(self.best_per_step)])
        return alphas, costs


def _point(sol, step=0):
    return TrajectoryPoint(sol.alpha, sol.K, sol.cost, sol.grad_norm,
                           sol.iterations, step=step)


def _advance(inst, K, a_prev, a_next, cfg, retry=True):
    """Warm-started solve at `a_next`; None when the branch is lost."""
    if is_stabilizing(inst, K, a_next, cfg.stability_tol):
        sol = minimize(inst, K, a_next, cfg)
        return sol if sol.converged else None
    # a warm start can only destabilize when damping goes down
    assert a_next < a_prev, (
        "warm start lost stability on an increasing damping step")
    if not retry:
        return None
    mid = 0.5 * (a_prev + a_next)
    if not is_stabilizing(inst, K, mid, cfg.stability_tol):
        return None
    sol = minimize(inst, K, mid, cfg)
    if not sol.converged:
        return None
    return _advance(inst, sol.K, mid, a_next, cfg, retry=False)


def _check_start(start, schedule):
    if not start.converged:
        raise PreconditionError("start solution is not converged")
    if not np.isclose(start.alpha, schedule.alphas[0], rtol=0, atol=1e-12):
        raise PreconditionError(
            f"start solved at alpha={start.alpha}, schedule begins at "
            f"{schedule.alphas[0]}")


def track(inst, start, schedule, cfg=None, traj_id=0):
    """Follow the local optimum `start` along `schedule`.

    The returned trajectory holds one point per schedule value reached. If
    the warm start cannot be re-solved (it destabilizes on a decreasing
    step even after one retry at half the step, or the local search fails
    to converge) the trajectory is marked lost and keeps its last good point.
    """
    cfg = SolverConfig() if cfg is None else cfg
    _check_start(start, schedule)
    traj = Trajectory(traj_id, [_point(start)])
    K, a_prev = start.K, schedule.alphas[0]
    for step, a in enumerate(schedule.alphas[1:], start=1):
        sol = _advance(inst, K, a_prev, a, cfg)
        if sol is None:
            traj.status = LOST
            traj.end_alpha = a
            break
        traj.points.append(_point(sol, step))
        K, a_prev = sol.K, a
    return traj


def _canonical(starts):
    return sorted(starts, key=lambda s: (s.cost, tuple(np.ravel(s.K))))


def track_bundle(inst, starts, schedule, cfg=None, merge_tol=1e-2):
    """Track several local optima together and merge those that meet.

    After every damping step, alive trajectories whose gains are within
    `merge_tol` (Frobenius) are merged: the lower-cost one survives, ties go
    to the lower id. Starts are put in canonical (cost, K) order before ids
    are assigned, so the output does not depend on the input order. Each
    point records its distance to the best point at the same step.
    """
    cfg = SolverConfig() if cfg is None else cfg
    starts = _canonical(starts)
    if not starts:
        raise PreconditionError("need at least one start")
    for s in starts:
        _check_start(s, schedule)
    trajs = [Trajectory(i, [_point(s)]) for i, s in enumerate(starts)]
    merges = []
    best = []
    alphas = schedule.alphas
    for step, a in enumerate(alphas):
        if step > 0:
            for t in trajs:
                if t.status != ALIVE:
                    continue
                sol = _advance(inst, t.last.K, alphas[step - 1], a, cfg)
                if sol is None:
                    t.status = LOST
                    t.end_alpha = a
                    continue
                t.points.append(_point(sol, step))
        current = [t for t in trajs if t.status == ALIVE]
        current.sort(key=lambda t: (t.last.cost, t.id))
        for i, keep in enumerate(current):
            if keep.status != ALIVE:
                continue
            for other in current[i + 1:]:
                if other.status != ALIVE:
                    continue
                if np.linalg.norm(other.last.K - keep.last.K) <= merge_tol:
                    other.status = MERGED
                    other.merged_into = keep.id
                    other.end_alpha = a
                    merges.append(MergeEvent(a, keep.id, other.id))
        here = [t for t in trajs if t.last.step == step]
        leader = min(here, key=lambda t: (t.last.cost, t.id))
        best.append((a, leader.id))
        for t in here:
            d = float(np.linalg.norm(t.last.K - leader.last.K))
            t.points[-1] = replace(t.points[-1], dist_to_best=d)
    return TrajectoryBundle(trajs, merges, best, schedule)


def hysteresis(inst, start, alpha_peak, step=0.002, cfg=None):
    """Sweep from ``start.alpha`` to `alpha_peak` and back.

    Goes up then down when `alpha_peak` exceeds the start damping, down then
    up otherwise. Returns the full trajectory (possibly lost on a decreasing
    leg, with its last stable point retained).
    """
    a0 = start.alpha
    if alpha_peak >= a0:
        sched = DampingSchedule.up_then_down(a0, alpha_peak, step)
    else:
        sched = DampingSchedule.down_then_up(a0, alpha_peak, step)
    return track(inst, start, sched, cfg)


@dataclass(frozen=True)
class ImprovementResult:
    K: np.ndarray
    cost: float
    start_cost: float
    improved: bool
    trajectory: Trajectory = None


def improve_by_damping(inst, K0, alpha_peak=0.6, step=0.002, cfg=None):
    """Raise the damping from 0 to `alpha_peak` and lower it back, tracking
    the local optimum reached from `K0`.

    `K0` is first polished by a local search at zero damping. If the
    return leg survives down to zero and does not raise the cost, its end
    point is returned; otherwise `K0` comes back with ``improved=False``.
    """
    cfg = SolverConfig() if cfg is None else cfg
    K0 = np.asarray(K0, dtype=float)
    J0 = _cost(inst, K0, 0.0, cfg.stability_tol)
    start = minimize(inst, K0, 0.0, cfg)
    fallback = ImprovementResult(K0, J0, J0, False)
    if not start.converged:
        return fallback
    traj = hysteresis(inst, start, alpha_peak, step, cfg)
    end = traj.last
    if traj.status != ALIVE or end.alpha != 0.0 or end.cost > J0:
        return replace(fallback, trajectory=traj)
    return ImprovementResult(end.K, end.cost, J0, end.cost < J0, traj)


@dataclass(frozen=True)
class AnnealResult:
    K: np.ndarray
    cost: float
    status: str
    trajectory: Trajectory = None

    @property
    def ok(self):
        return self.status == 'ok'


def anneal_from_damped(inst, alpha_start, step=0.002, cfg=None, rng_seed=0,
                       n_samples=100):
    """Find the best local optimum at heavy damping and follow it down to
    zero damping.

    Status is 'ok' when the branch reaches ``alpha = 0``, 'lost' when it
    dies on the way (the end point is then the last stable point), and
    'no_start' when the multi-start at `alpha_start` finds nothing.
    """
    cfg = SolverConfig() if cfg is None else cfg
    sols = multi_start(inst, alpha_start, n_samples, rng_seed, cfg)
    if not sols:
        return AnnealResult(None, float('nan'), 'no_start')
    sched = DampingSchedule.linear(alpha_start, 0.0, step)
    traj = track(inst, sols[0], sched, cfg)
    end = traj.last
    status = 'ok' if traj.status == ALIVE and end.alpha == 0.0 else 'lost'
    return AnnealResult(end.K, end.cost, status, traj)
