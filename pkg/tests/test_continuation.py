import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scalar_instance
from dampedodc.continuation import (ALIVE, LOST, MERGED, DampingSchedule,
                                    anneal_from_damped, hysteresis,
                                    improve_by_damping, track, track_bundle)
from dampedodc.exceptions import PreconditionError
from dampedodc.experiments import random_instance
from dampedodc.local_search import SolverConfig, minimize, multi_start
from dampedodc.objective import ProblemInstance


def riccati_gain(alpha):
    return -(np.sqrt(2 + 2 * alpha + alpha**2) - 1 - alpha)


@pytest.fixture(scope='module')
def paper_starts(paper):
    return multi_start(paper, 0.0, 300, 0)


@pytest.fixture(scope='module')
def paper_bundle(paper, paper_starts):
    return track_bundle(paper, paper_starts,
                        DampingSchedule.linear(0.0, 0.6, 0.002))


# -- schedules -------------------------------------------------------------------

def test_schedule_shapes():
    s = DampingSchedule.linear(0.0, 0.6, 0.002)
    assert len(s) == 301 and s.direction == 'increasing'
    assert s.alphas[-1] == 0.6 and s.alphas[1] == 0.002
    s = DampingSchedule.up_then_down(0.0, 0.1, 0.05)
    assert s.alphas == (0.0, 0.05, 0.1, 0.05, 0.0)
    s = DampingSchedule.down_then_up(1.0, 0.5, 0.25)
    assert s.alphas == (1.0, 0.75, 0.5, 0.75, 1.0)
    assert DampingSchedule.linear(1.0, 0.0, 0.5).direction == 'decreasing'
    assert DampingSchedule.up_then_down(0.3, 0.3, 0.1).alphas == (0.3, 0.3)


@pytest.mark.parametrize('args', [((), 'increasing'), ((-1.0,), 'constant'),
                                  ((0.0,), 'sideways')])
def test_schedule_validation(args):
    with pytest.raises(PreconditionError):
        DampingSchedule(*args)


# -- single trajectories ------------------------------------------------------

def test_constant_schedule_is_fixed_point(scalar):
    start = minimize(scalar, [[0.0]], 0.5)
    traj = track(scalar, start, DampingSchedule((0.5, 0.5), 'constant'))
    assert len(traj.points) == 2
    np.testing.assert_array_equal(traj.points[1].K, traj.points[0].K)
    assert traj.points[1].iterations == 0


def test_scalar_tracks_damped_riccati(scalar):
    cfg = SolverConfig(grad_tol=1e-8)
    start = minimize(scalar, [[0.0]], 0.0, cfg)
    traj = track(scalar, start, DampingSchedule.linear(0.0, 2.0, 0.05), cfg)
    assert traj.status == ALIVE and len(traj.points) == 41
    for p in traj.points:
        assert p.K[0, 0] == pytest.approx(riccati_gain(p.alpha), abs=1e-7)


def test_track_start_mismatch(scalar):
    start = minimize(scalar, [[0.0]], 0.0)
    with pytest.raises(PreconditionError):
        track(scalar, start, DampingSchedule.linear(0.1, 0.5, 0.1))


def test_worst_start_reaches_best_terminal(paper, paper_starts, paper_bundle):
    worst = paper_starts[-1]
    traj = track(paper, worst, DampingSchedule.linear(0.0, 0.6, 0.002))
    best_end = paper_bundle.alive()[0].last.K
    assert np.linalg.norm(traj.last.K - best_end) <= 1e-2


def test_lost_when_plant_cannot_be_stabilized():
    # b = 0: the loop is stable only for alpha > 1
    inst = scalar_instance(a=1.0, b=0.0)
    start = minimize(inst, [[0.0]], 2.0)
    traj = track(inst, start, DampingSchedule.linear(2.0, 0.0, 0.1))
    assert traj.status == LOST
    assert traj.last.alpha > 1.0
    assert traj.end_alpha <= 1.0


# -- bundles -------------------------------------------------------------------

def test_identical_starts_merge_immediately(scalar):
    s = minimize(scalar, [[0.0]])
    b = track_bundle(scalar, [s, s, s], DampingSchedule.linear(0, 0.1, 0.05))
    assert [t.status for t in b.trajectories] == [ALIVE, MERGED, MERGED]
    assert all(e.alpha == 0.0 and e.survivor == 0 for e in b.merge_events)


def test_paper_bundle_collapses(paper_bundle):
    assert len(paper_bundle.trajectories) >= 2
    assert len(paper_bundle.alive()) == 1
    alphas, best = paper_bundle.best_cost_per_alpha()
    assert np.all(np.diff(best) < 0)
    assert all(e.alpha <= 0.45 for e in paper_bundle.merge_events)


def test_distance_to_best(paper_bundle):
    for k, (a, lead) in enumerate(paper_bundle.best_per_step):
        assert paper_bundle.point(lead, k).dist_to_best == 0.0
        for t in paper_bundle.trajectories:
            p = paper_bundle.point(t.id, k)
            if p is not None:
                assert p.dist_to_best >= 0.0


def test_merge_survivor_is_lower_cost(paper_bundle):
    for e in paper_bundle.merge_events:
        step = next(k for k, (a, _) in enumerate(paper_bundle.best_per_step)
                    if a == e.alpha)
        s = paper_bundle.point(e.survivor, step)
        a = paper_bundle.point(e.absorbed, step)
        assert (s.cost, e.survivor) <= (a.cost, e.absorbed)


def _bundle_signature(b):
    return ([(t.id, t.status, t.merged_into, tuple(t.costs))
             for t in b.trajectories],
            [(e.alpha, e.survivor, e.absorbed) for e in b.merge_events])


@pytest.fixture(scope='module')
def two_cluster():
    inst = random_instance(3, 3, 77)
    starts = multi_start(inst, 0.0, 50, 77)
    assert len(starts) == 2
    return inst, starts, DampingSchedule.linear(0.0, 0.5, 0.01)


def test_two_cluster_merge_reproducible(two_cluster):
    inst, starts, sched = two_cluster
    a = track_bundle(inst, starts, sched)
    b = track_bundle(inst, starts, sched)
    assert len(a.merge_events) == 1
    assert _bundle_signature(a) == _bundle_signature(b)


@settings(max_examples=4)
@given(st.permutations([0, 1]))
def test_merge_symmetry(two_cluster, perm):
    inst, starts, sched = two_cluster
    ref = track_bundle(inst, starts, sched)
    out = track_bundle(inst, [starts[i] for i in perm], sched)
    assert _bundle_signature(out) == _bundle_signature(ref)


# -- hysteresis and heuristics ---------------------------------------------------

def test_degenerate_hysteresis(scalar):
    start = minimize(scalar, [[0.0]])
    traj = hysteresis(scalar, start, 0.0)
    assert len(traj.points) == 2
    np.testing.assert_array_equal(traj.points[0].K, traj.points[1].K)


def test_hysteresis_improves_worst(paper, paper_starts):
    worst = paper_starts[-1]
    traj = hysteresis(paper, worst, 0.6, 0.002)
    assert traj.status == ALIVE
    assert traj.last.alpha == 0.0
    assert traj.last.cost < worst.cost


def test_convex_regime_loop_retraces():
    inst = random_instance(3, 3, 1)
    alpha = 20.0
    cfg = SolverConfig(grad_tol=1e-7).scaled(alpha)
    start = multi_start(inst, alpha, 5, 0, cfg)[0]
    traj = hysteresis(inst, start, alpha + 1.0, 0.05, cfg)
    fwd = {p.alpha: p.cost for p in traj.points[:21]}
    back = {p.alpha: p.cost for p in traj.points[20:]}
    assert set(fwd) == set(back)
    assert max(abs(fwd[a] - back[a]) for a in fwd) <= 1e-6


def test_improve_by_damping(paper, paper_starts):
    res = improve_by_damping(paper, paper_starts[-1].K, 0.6, 0.002)
    assert res.improved
    assert res.cost < res.start_cost
    assert res.cost == pytest.approx(paper_starts[0].cost, rel=1e-3)


def test_improve_keeps_global_optimum(scalar):
    K = minimize(scalar, [[0.0]], cfg=SolverConfig(grad_tol=1e-10)).K
    res = improve_by_damping(scalar, K, 0.2, 0.05)
    assert res.cost <= res.start_cost + 1e-12


def test_anneal_scalar():
    inst = scalar_instance()
    res = anneal_from_damped(inst, 10.0, 0.01, n_samples=10)
    assert res.ok
    assert res.K[0, 0] == pytest.approx(riccati_gain(0.0), abs=2e-3)
    assert res.cost == pytest.approx(np.sqrt(2) - 1, abs=1e-6)


def test_anneal_paper(paper, paper_starts):
    res = anneal_from_damped(paper, 0.6, 0.002, n_samples=20)
    assert res.ok
    assert res.cost == pytest.approx(paper_starts[0].cost, rel=1e-4)


def test_anneal_infeasible_branch():
    inst = ProblemInstance([[1.0]], [[0.0]], [[1.0]], [[1.0]], [[1.0]],
                           [[1.0]])
    res = anneal_from_damped(inst, 2.0, 0.1, n_samples=5)
    assert res.status == 'lost'
    assert res.trajectory.last.alpha > 1.0


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_never_lost_going_up(seed):
    from conftest import random_point
    inst, K, alpha = random_point(seed)
    start = minimize(inst, K, alpha)
    assert start.converged
    traj = track(inst, start, DampingSchedule.linear(alpha, alpha + 1.0, 0.1))
    assert traj.status == ALIVE
    assert np.all(np.diff(traj.costs) < 0)
