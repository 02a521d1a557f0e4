"""Damped structured LQR objective.

For a static gain ``K`` (m x n) restricted to a sparsity mask, the damped
cost is ``J(K, alpha) = tr(D0 P)`` where ``P`` solves

    (A - alpha I + B K)^T P + P (A - alpha I + B K) + K^T R K + Q = 0.

The companion covariance ``L`` solves the transposed equation with ``D0`` on
the right-hand side; gradient and Hessian are built from the pair (P, L).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import InstabilityError, PreconditionError, SolverFailure
from .linalg import (DEFAULT_STABILITY_TOL, as_matrix, commutation_matrix,
                     solve_lyapunov_ctrl, solve_lyapunov_obs,
                     spectral_abscissa, vec)

__all__ = ['ProblemInstance', 'LyapunovPair', 'closed_loop', 'cost',
           'lyapunov_pair', 'gradient', 'projected_gradient', 'hessian',
           'projected_hessian', 'stationarity_residual', 'project',
           'is_stabilizing', 'evaluate']


def _check_symmetric(M, name, definite):
    if not np.allclose(M, M.T, rtol=0, atol=1e-10 * (1 + np.abs(M).max())):
        raise PreconditionError(f"{name} must be symmetric")
    lam = np.linalg.eigvalsh((M + M.T) / 2).min()
    scale = 1e-12 * (1 + np.abs(M).max())
    if definite and lam <= 0:
        raise PreconditionError(f"{name} must be positive definite "
                                f"(min eigenvalue {lam:.3e})")
    if not definite and lam < -scale:
        raise PreconditionError(f"{name} must be positive semidefinite "
                                f"(min eigenvalue {lam:.3e})")


def _frozen(M):
    M = np.array(M, dtype=float)
    M.flags.writeable = False
    return M


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Plant, cost weights and gain sparsity pattern.

    ``mask`` is the m x n 0/1 indicator of free gain entries. All arrays are
    copied and made read-only, so an instance can be shared freely.
    """
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    D0: np.ndarray
    mask: np.ndarray
    name: str = ''
    notes: tuple = field(default=())

    def __post_init__(self):
        A = as_matrix(self.A, 'A', square=True)
        B = as_matrix(self.B, 'B')
        n = A.shape[0]
        if B.shape[0] != n:
            raise PreconditionError(f"B must have {n} rows, got {B.shape}")
        m = B.shape[1]
        Q = as_matrix(self.Q, 'Q', square=True)
        R = as_matrix(self.R, 'R', square=True)
        D0 = as_matrix(self.D0, 'D0', square=True)
        mask = as_matrix(self.mask, 'mask')
        if Q.shape != (n, n) or D0.shape != (n, n):
            raise PreconditionError("Q and D0 must be n x n")
        if R.shape != (m, m):
            raise PreconditionError("R must be m x m")
        if mask.shape != (m, n):
            raise PreconditionError(f"mask must be {m}x{n}, got {mask.shape}")
        if not np.all((mask == 0) | (mask == 1)):
            raise PreconditionError("mask entries must be 0 or 1")
        _check_symmetric(Q, 'Q', definite=False)
        _check_symmetric(R, 'R', definite=True)
        _check_symmetric(D0, 'D0', definite=True)
        for key, val in zip('A B Q R D0 mask'.split(), (A, B, Q, R, D0, mask)):
            object.__setattr__(self, key, _frozen(val))
        object.__setattr__(self, 'notes', tuple(self.notes))

    @classmethod
    def create(cls, A, B, Q=None, R=None, D0=None, mask=None, **kwargs):
        """Build an instance, defaulting Q, R, D0 to identities and the mask
        to all-free."""
        A = as_matrix(A, 'A', square=True)
        B = as_matrix(B, 'B')
        n, m = A.shape[0], B.shape[1]
        return cls(A, B,
                   np.eye(n) if Q is None else Q,
                   np.eye(m) if R is None else R,
                   np.eye(n) if D0 is None else D0,
                   np.ones((m, n)) if mask is None else mask,
                   **kwargs)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def free_index(self):
        """Positions in column-major vec(K) of the free gain entries."""
        return np.flatnonzero(vec(self.mask))

    def shifted(self, alpha):
        """Same instance with ``A`` replaced by ``A - alpha I``."""
        return ProblemInstance(self.A - alpha * np.eye(self.n), self.B, self.Q,
                               self.R, self.D0, self.mask, self.name, self.notes)

    def to_dict(self):
        return {'name': self.name,
                **{k: getattr(self, k).tolist()
                   for k in ('A', 'B', 'Q', 'R', 'D0', 'mask')},
                'notes': list(self.notes)}


@dataclass(frozen=True)
class LyapunovPair:
    P: np.ndarray
    L: np.ndarray


def project(inst, K):
    """Zero the gain entries that the mask fixes to zero."""
    return np.asarray(K, dtype=float) * inst.mask


def _gain(inst, K):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape != (inst.m, inst.n):
        raise PreconditionError(f"K must be {inst.m}x{inst.n}, "
                                f"got {np.shape(K)}")
    return K


def closed_loop(inst, K, alpha=0.0):
    """``A - alpha I + B K``."""
    K = _gain(inst, K)
    return inst.A - alpha * np.eye(inst.n) + inst.B @ K


def is_stabilizing(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    return spectral_abscissa(closed_loop(inst, K, alpha)) < -tol


def _stable_closed_loop(inst, K, alpha, tol):
    Acl = closed_loop(inst, K, alpha)
    a = spectral_abscissa(Acl)
    if not a < -tol:
        raise InstabilityError(
            f"closed loop is not stable at alpha={alpha} "
            f"(spectral abscissa {a:.6g})", abscissa=a)
    return Acl


def lyapunov_pair(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    """Value matrix ``P`` and state covariance ``L`` at gain `K`."""
    K = _gain(inst, K)
    Acl = _stable_closed_loop(inst, K, alpha, tol)
    P = solve_lyapunov_obs(Acl, inst.Q + K.T @ inst.R @ K, check=False)
    L = solve_lyapunov_ctrl(Acl, inst.D0, check=False)
    return LyapunovPair(P, L)


def cost(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    """Damped cost ``J(K, alpha) = tr(D0 P)``.

    Raises
    ------
    InstabilityError
        If ``A - alpha I + B K`` is not stable at tolerance `tol`.
    """
    K = _gain(inst, K)
    Acl = _stable_closed_loop(inst, K, alpha, tol)
    P = solve_lyapunov_obs(Acl, inst.Q + K.T @ inst.R @ K, check=False)
    return float(np.sum(inst.D0 * P))


def gradient(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    """Unprojected gradient ``2 (B^T P + R K) L`` with respect to `K`."""
    K = _gain(inst, K)
    pair = lyapunov_pair(inst, K, alpha, tol)
    return 2.0 * (inst.B.T @ pair.P + inst.R @ K) @ pair.L


def projected_gradient(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    return gradient(inst, K, alpha, tol) * inst.mask


def stationarity_residual(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    """Frobenius norm of ``((B^T P + R K) L) o mask`` (half the projected
    gradient norm)."""
    return float(np.linalg.norm(projected_gradient(inst, K, alpha, tol))) / 2


def evaluate(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL, grad=True):
    """Cost and projected gradient sharing one LU factorization.

    Returns ``(J, G)`` with ``G = None`` when ``grad`` is false. This is the
    hot path of the local search.
    """
    K = _gain(inst, K)
    Acl = _stable_closed_loop(inst, K, alpha, tol)
    n = inst.n
    eye = np.eye(n)
    S = np.kron(eye, Acl.T) + np.kron(Acl.T, eye)
    try:
        lu = scipy.linalg.lu_factor(S, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverFailure(f"Lyapunov solve failed: {exc}") from exc
    W = inst.Q + K.T @ inst.R @ K
    P = scipy.linalg.lu_solve(lu, -W.reshape(-1, order='F'),
                              check_finite=False).reshape((n, n), order='F')
    P = (P + P.T) / 2
    J = float(np.sum(inst.D0 * P))
    if not grad:
        return J, None
    # the controllability operator is the transpose of the observability one
    L = scipy.linalg.lu_solve(lu, -inst.D0.reshape(-1, order='F'), trans=1,
                              check_finite=False).reshape((n, n), order='F')
    L = (L + L.T) / 2
    G = 2.0 * (inst.B.T @ P + inst.R @ K) @ L * inst.mask
    return J, G


def hessian(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL, symmetrize=True):
    """Hessian of ``vec(K) -> J(K, alpha)`` over all m*n gain entries.

    Uses ``2 {L (x) R + G^T + G}`` with

        G = [I (x) (B^T P + R K)] [-(I (x) Acl + Acl (x) I)]^{-1}
            (I + P(n,n)) [L (x) B],

    where ``vec`` stacks columns and ``P(n,n)`` is the commutation matrix.
    The Kronecker sum enters negated (it is negative definite for a stable
    closed loop); the inverse is applied as a linear solve.
    """
    K = _gain(inst, K)
    Acl = _stable_closed_loop(inst, K, alpha, tol)
    n, B, R = inst.n, inst.B, inst.R
    pair = lyapunov_pair(inst, K, alpha, tol)
    P, L = pair.P, pair.L
    eye = np.eye(n)
    S = -(np.kron(eye, Acl) + np.kron(Acl, eye))
    rhs = (np.eye(n * n) + commutation_matrix(n)) @ np.kron(L, B)
    try:
        X = np.linalg.solve(S, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"singular Kronecker sum in Hessian: {exc}") from exc
    G = np.kron(eye, B.T @ P + R @ K) @ X
    H = 2.0 * (np.kron(L, R) + G.T + G)
    if symmetrize:
        H = (H + H.T) / 2
    return H


def projected_hessian(inst, K, alpha=0.0, tol=DEFAULT_STABILITY_TOL):
    """Principal submatrix of `hessian` on the free entries of vec(K)."""
    idx = inst.free_index
    return hessian(inst, K, alpha, tol)[np.ix_(idx, idx)]
