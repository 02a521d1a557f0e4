"""Small dense matrix primitives.

Stability tests, continuous-time Lyapunov solvers, Kronecker and
commutation matrices, and a Routh-Hurwitz test for low-order polynomials.
Everything here is a pure function of its arguments and is sized for the
n <= ~30 systems the rest of the package works with.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (ConditioningWarning, InfeasibleSolveError,
                         PreconditionError, SolverFailure,
                         UnsupportedDegreeError)

__all__ = ['as_matrix', 'spectral_abscissa', 'is_stable', 'StabilityReport',
           'stability_report', 'solve_lyapunov_obs', 'solve_lyapunov_ctrl',
           'kron', 'commutation_matrix', 'vec', 'unvec', 'routh_hurwitz',
           'DEFAULT_STABILITY_TOL']

DEFAULT_STABILITY_TOL = 1e-9

# reciprocal condition number below which a Lyapunov solve is flagged
_RCOND_WARN = 1e-12


def as_matrix(M, name='matrix', square=False):
    """Return `M` as a finite 2-D float array (a copy is not forced)."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise PreconditionError(f"{name} must be a non-empty 2-D array, "
                                f"got shape {np.shape(M)}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise PreconditionError(f"{name} must be square, got {arr.shape}")
    return arr


def vec(M):
    """Column-stacking vectorization."""
    return np.asarray(M).reshape(-1, order='F')


def unvec(v, rows, cols):
    return np.asarray(v).reshape((rows, cols), order='F')


def spectral_abscissa(M):
    """Largest real part over the eigenvalues of `M`.

    >>> spectral_abscissa([[0, 1], [-2, -3]])
    -1.0
    """
    M = as_matrix(M, 'M', square=True)
    try:
        eigs = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(eigs)):
        raise SolverFailure("eigenvalue computation returned non-finite values")
    return float(np.max(eigs.real))


def is_stable(M, tol=DEFAULT_STABILITY_TOL):
    """True iff every eigenvalue of `M` has real part below ``-tol``."""
    if tol < 0:
        raise PreconditionError("tol must be nonnegative")
    return spectral_abscissa(M) < -tol


@dataclass(frozen=True)
class StabilityReport:
    spectral_abscissa: float
    is_stable: bool
    margin_tolerance: float


def stability_report(M, tol=DEFAULT_STABILITY_TOL):
    a = spectral_abscissa(M)
    return StabilityReport(a, a < -tol, tol)


def _kron_sum(A):
    n = A.shape[0]
    eye = np.eye(n)
    return np.kron(eye, A) + np.kron(A, eye)


def _solve_kron(S, rhs):
    try:
        lu, piv = scipy.linalg.lu_factor(S, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverFailure(f"Lyapunov solve failed: {exc}") from exc
    # cheap 1-norm reciprocal condition estimate from the LU factors
    anorm = np.linalg.norm(S, 1)
    rcond = scipy.linalg.lapack.dgecon(lu, anorm, norm='1')[0]
    if rcond < _RCOND_WARN:
        warnings.warn(f"ill-conditioned Lyapunov solve (rcond={rcond:.2e})",
                      ConditioningWarning, stacklevel=3)
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def _lyap(Acl, W, transpose, method, check):
    Acl = as_matrix(Acl, 'Acl', square=True)
    W = as_matrix(W, 'W', square=True)
    n = Acl.shape[0]
    if W.shape != (n, n):
        raise PreconditionError(f"W must be {n}x{n}, got {W.shape}")
    if check and not is_stable(Acl, 0.0):
        raise InfeasibleSolveError(
            "Lyapunov equation needs a stable coefficient matrix "
            f"(spectral abscissa {spectral_abscissa(Acl):.3e})")
    Aeff = Acl.T if transpose else Acl
    if method == 'kron':
        X = unvec(_solve_kron(_kron_sum(Aeff), -vec(W)), n, n)
    elif method == 'schur':
        X = scipy.linalg.solve_continuous_lyapunov(Aeff, -W)
    else:
        raise PreconditionError(f"unknown Lyapunov method {method!r}")
    return (X + X.T) / 2


def solve_lyapunov_obs(Acl, W, method='kron', check=True):
    """Solve ``Acl.T @ X + X @ Acl + W = 0`` for symmetric `X`.

    Parameters
    ----------
    Acl : (n, n) array_like
        Stable closed-loop matrix.
    W : (n, n) array_like
        Symmetric right-hand side.
    method : {'kron', 'schur'}
        'kron' solves the dense n^2 x n^2 vectorized system; 'schur' uses
        the Bartels-Stewart solver from scipy.
    check : bool
        Verify stability of `Acl` first. Callers that have already checked
        can skip the extra eigenvalue computation.

    Returns
    -------
    X : (n, n) ndarray
        The symmetrized solution.

    Raises
    ------
    InfeasibleSolveError
        If `Acl` is not stable.
    """
    return _lyap(Acl, W, True, method, check)


def solve_lyapunov_ctrl(Acl, W, method='kron', check=True):
    """Solve ``Acl @ X + X @ Acl.T + W = 0``; see `solve_lyapunov_obs`."""
    return _lyap(Acl, W, False, method, check)


def kron(Am, Bm):
    return np.kron(np.asarray(Am, dtype=float), np.asarray(Bm, dtype=float))


def commutation_matrix(n, m=None):
    """Permutation ``P`` with ``P @ vec(M) == vec(M.T)`` for n x m `M`."""
    m = n if m is None else m
    P = np.zeros((n * m, n * m))
    for i in range(n):
        for j in range(m):
            # M[i, j] sits at j*n + i in vec(M) and at i*m + j in vec(M.T)
            P[i * m + j, j * n + i] = 1.0
    return P


def routh_hurwitz(coeffs):
    """Decide whether a polynomial of degree <= 3 is Hurwitz.

    `coeffs` are ordered from the leading coefficient down, as in
    ``numpy.poly``. A non-monic polynomial is normalized by its (nonzero)
    leading coefficient.

    >>> routh_hurwitz([1, 3, 2])
    True
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size < 2:
        raise PreconditionError("need at least a degree-1 polynomial")
    if not np.all(np.isfinite(c)):
        raise PreconditionError("polynomial coefficients must be finite")
    if c[0] == 0:
        raise PreconditionError("leading coefficient must be nonzero")
    degree = c.size - 1
    if degree > 3:
        raise UnsupportedDegreeError(
            f"Routh-Hurwitz test implemented for degree <= 3, got {degree}")
    c = c / c[0]
    if degree == 1:
        return bool(c[1] > 0)
    if degree == 2:
        # x^2 + c1 x + c0 = x^2 - tr x + det
        return bool(c[1] > 0 and c[2] > 0)
    c2, c1, c0 = c[1], c[2], c[3]
    return bool(c2 > 0 and c0 > 0 and c2 * c1 > c0)
