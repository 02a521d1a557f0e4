import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dampedodc.exceptions import (ConditioningWarning, InfeasibleSolveError,
                                  PreconditionError, UnsupportedDegreeError)
from dampedodc.linalg import (commutation_matrix, is_stable, kron,
                              routh_hurwitz, solve_lyapunov_ctrl,
                              solve_lyapunov_obs, spectral_abscissa,
                              stability_report, unvec, vec)

seeds = st.integers(0, 2**32 - 1)


def _stable(rng, n, margin=0.1):
    M = rng.standard_normal((n, n))
    return M - (spectral_abscissa(M) + margin) * np.eye(n)


@pytest.mark.parametrize('M, expected', [
    (np.diag([-1.0, -2.0]), -1.0),
    ([[0.0, 1.0], [-2.0, -3.0]], -1.0),
    ([[-6.0, 0.0], [10.0, 1.0]], 1.0),
])
def test_spectral_abscissa_examples(M, expected):
    assert spectral_abscissa(M) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('M, expected', [
    (-np.eye(3), True),
    ([[-4.0, -2.0], [10.0, 3.0]], True),
    (np.zeros((2, 2)), False),
])
def test_is_stable_examples(M, expected):
    assert is_stable(M, 0.0) is expected


def test_is_stable_tolerance_margin():
    M = np.diag([-1e-10, -1.0])
    assert is_stable(M, 0.0)
    assert not is_stable(M)
    rep = stability_report(M)
    assert rep.spectral_abscissa == pytest.approx(-1e-10)
    assert not rep.is_stable


def test_is_stable_negative_tol():
    with pytest.raises(PreconditionError):
        is_stable(-np.eye(2), -1.0)


@pytest.mark.parametrize('solver', [solve_lyapunov_obs, solve_lyapunov_ctrl])
@pytest.mark.parametrize('method', ['kron', 'schur'])
def test_lyapunov_diagonal(solver, method):
    X = solver(np.diag([-1.0, -2.0]), np.eye(2), method=method)
    np.testing.assert_allclose(X, np.diag([0.5, 0.25]), atol=1e-14)
    n = 4
    X = solver(-np.eye(n), np.eye(n), method=method)
    np.testing.assert_allclose(X, np.eye(n) / 2, atol=1e-14)


def test_lyapunov_companion_hand_oracle():
    # A^T X + X A + I = 0 for A = [[0, 1], [-2, -3]] written out for
    # (x11, x12, x22):
    #   -4 x12 + 1 = 0
    #   x11 - 3 x12 - 2 x22 = 0
    #   2 x12 - 6 x22 + 1 = 0
    Acl = np.array([[0.0, 1.0], [-2.0, -3.0]])
    x12 = 0.25
    x22 = (2 * x12 + 1) / 6
    x11 = 3 * x12 + 2 * x22
    X = solve_lyapunov_obs(Acl, np.eye(2))
    np.testing.assert_allclose(X, [[x11, x12], [x12, x22]], atol=1e-14)
    res = Acl.T @ X + X @ Acl + np.eye(2)
    assert np.abs(res).max() <= 1e-10


def test_ctrl_equals_obs_for_symmetric():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((3, 3))
    S = -(M @ M.T) - 0.1 * np.eye(3)
    np.testing.assert_allclose(solve_lyapunov_ctrl(S, np.eye(3)),
                               solve_lyapunov_obs(S, np.eye(3)), atol=1e-14)


def test_ctrl_nilpotent_kronecker_oracle():
    N = np.triu(np.ones((3, 3)), 1)
    Acl = -np.eye(3) + N
    S = np.kron(np.eye(3), Acl) + np.kron(Acl, np.eye(3))
    oracle = np.linalg.solve(S, -np.eye(3).reshape(-1, order='F'))
    X = solve_lyapunov_ctrl(Acl, np.eye(3))
    np.testing.assert_allclose(vec(X), oracle, rtol=1e-12)


def test_lyapunov_unstable_rejected():
    with pytest.raises(InfeasibleSolveError):
        solve_lyapunov_obs(np.diag([1.0, -1.0]), np.eye(2))


def test_lyapunov_shape_mismatch():
    with pytest.raises(PreconditionError):
        solve_lyapunov_obs(-np.eye(2), np.eye(3))
    with pytest.raises(PreconditionError):
        solve_lyapunov_obs(-np.eye(2), np.eye(2), method='bogus')


def test_lyapunov_conditioning_warning():
    Acl = np.diag([-1.0, -1e-14])
    with pytest.warns(ConditioningWarning):
        solve_lyapunov_obs(Acl, np.eye(2))
    with warnings.catch_warnings():
        warnings.simplefilter('error', ConditioningWarning)
        solve_lyapunov_obs(-np.eye(2), np.eye(2))


@given(seeds, st.integers(1, 5))
def test_lyapunov_psd_and_symmetric(seed, n):
    rng = np.random.default_rng(seed)
    Acl = _stable(rng, n)
    G = rng.standard_normal((n, n))
    W = G @ G.T
    X = solve_lyapunov_obs(Acl, W)
    scale = max(np.linalg.norm(X), 1e-300)
    assert np.linalg.norm(X - X.T) <= 1e-12 * scale
    assert np.linalg.eigvalsh(X).min() >= -1e-9 * scale


@given(seeds, st.integers(1, 5))
def test_lyapunov_kronecker_oracle(seed, n):
    rng = np.random.default_rng(seed)
    Acl = _stable(rng, n)
    G = rng.standard_normal((n, n))
    W = G + G.T
    # independent oracle: dense solve of (I (x) A^T + A^T (x) I) vec X = -vec W
    At = Acl.T
    S = np.kron(np.eye(n), At) + np.kron(At, np.eye(n))
    oracle = unvec(np.linalg.solve(S, -vec(W)), n, n)
    for method in ('kron', 'schur'):
        X = solve_lyapunov_obs(Acl, W, method=method)
        err = np.linalg.norm(X - oracle) / max(np.linalg.norm(oracle), 1e-300)
        assert err <= 1e-9


def test_kron_examples():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(kron(np.diag([1.0, 2.0]),
                                       np.diag([3.0, 4.0])),
                                  np.diag([3.0, 4.0, 6.0, 8.0]))


def test_commutation_example():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    P = commutation_matrix(2)
    np.testing.assert_array_equal(P @ vec(M), vec(M.T))
    np.testing.assert_array_equal(vec(M.T), [1.0, 2.0, 3.0, 4.0])


@given(st.integers(1, 6), st.integers(1, 6), seeds)
def test_commutation_properties(n, m, seed):
    P = commutation_matrix(n, m)
    np.testing.assert_array_equal(P @ P.T, np.eye(n * m))
    np.testing.assert_array_equal(commutation_matrix(m, n) @ P, np.eye(n * m))
    if n == m:
        np.testing.assert_array_equal(P @ P, np.eye(n * n))
    M = np.random.default_rng(seed).standard_normal((n, m))
    np.testing.assert_array_equal(P @ vec(M), vec(M.T))


def test_vec_is_column_major():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(vec(M), [1.0, 3.0, 2.0, 4.0])
    np.testing.assert_array_equal(unvec(vec(M), 2, 2), M)


def _cubic(h2, t):
    return [1.0, t - t * h2, h2 - t**2 * h2, (t - 2) * h2]


@pytest.mark.parametrize('coeffs, expected', [
    ([1.0, 3.0, 2.0], True),
    (_cubic(-1.0, 1.5), True),
    (_cubic(-1.0, 3.0), False),
    ([1.0, 1.0], True),
    ([2.0, -1.0], False),
    ([-1.0, -3.0, -2.0], True),
    ([1.0, 0.0, 1.0], False),
])
def test_routh_hurwitz_examples(coeffs, expected):
    assert routh_hurwitz(coeffs) is expected


def test_routh_hurwitz_degree_limit():
    with pytest.raises(UnsupportedDegreeError):
        routh_hurwitz([1.0, 4.0, 6.0, 4.0, 1.0])
    with pytest.raises(PreconditionError):
        routh_hurwitz([0.0, 1.0, 2.0])


@given(seeds, st.sampled_from([2, 3]))
def test_routh_hurwitz_matches_eigenvalues(seed, n):
    M = np.random.default_rng(seed).standard_normal((n, n))
    a = spectral_abscissa(M)
    assume(abs(a) > 1e-6)
    assert routh_hurwitz(np.poly(M)) == is_stable(M, 0.0)
