"""Numerical checks of structural facts about the damped problem.

* cost is strictly decreasing in the damping level at a fixed gain;
* local optima and their costs shrink to zero under heavy damping when the
  sparsity pattern is block diagonal;
* the projected Hessian is positive definite on a bounded ball once the
  damping is large;
* lower/upper bounds on the covariance ``L``;
* for a direction ``H`` other than ``-lambda I``, an explicit stable ``A``
  with ``A + t0 H`` unstable.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import (AlphaTooSmallError, InstabilityError,
                         NotACounterexampleError, PreconditionError,
                         SearchFailure, UnsupportedStructureError)
from .linalg import as_matrix, spectral_abscissa
from .local_search import SolverConfig, multi_start
from .objective import (cost, is_stabilizing, lyapunov_pair,
                        projected_hessian)

__all__ = ['DampingCheck', 'check_damping_property', 'AsymptoticsReport',
           'check_asymptotic_zero', 'pattern_is_block_diagonal',
           'sample_ball', 'check_hessian_pd', 'BoundsReport',
           'check_covariance_bounds', 'CounterexampleCertificate',
           'stable_direction_counterexample', 'disconnected_t_set',
           'stable_intervals', 'complex_pair_parameters', 'ball_is_stabilizing',
           'T_SET_BASE', 'T_SET_B', 'T_SET_C']

# certificate margins: stable side below -MARGIN, unstable side above +MARGIN
MARGIN = 1e-8


# -- damping property --------------------------------------------------------

@dataclass(frozen=True)
class DampingCheck:
    passed: bool
    alphas: tuple
    costs: tuple
    violations: tuple = ()


def check_damping_property(inst, K, alpha_grid):
    """Evaluate ``J(K, alpha)`` along an increasing grid and report every
    step where it fails to decrease strictly.

    Raises
    ------
    PreconditionError
        If the grid is not strictly increasing or `K` does not stabilize the
        plant at the smallest damping in the grid.
    """
    grid = [float(a) for a in alpha_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("alpha grid must be strictly increasing "
                                "with at least two values")
    if not is_stabilizing(inst, K, grid[0]):
        raise PreconditionError(f"K does not stabilize at alpha={grid[0]}")
    costs = [cost(inst, K, a) for a in grid]
    bad = tuple((grid[i], grid[i + 1], costs[i], costs[i + 1])
                for i in range(len(grid) - 1) if not costs[i + 1] < costs[i])
    return DampingCheck(not bad, tuple(grid), tuple(costs), bad)


# -- asymptotics -------------------------------------------------------------

def pattern_is_block_diagonal(mask):
    """True if `mask` is square and equals a block-diagonal arrangement of
    all-ones square blocks."""
    mask = np.asarray(mask)
    n = mask.shape[0]
    if mask.shape != (n, n):
        return False
    ref = np.zeros_like(mask)
    i = 0
    while i < n:
        row = mask[i, i:]
        s = int(np.argmin(row)) if not row.all() else row.size
        if s == 0:
            return False
        ref[i:i + s, i:i + s] = 1
        i += s
    return bool(np.array_equal(ref, mask))


def _check_block_pattern(inst):
    if inst.m != inst.n:
        raise PreconditionError("asymptotic check needs m == n so that the "
                                "mask can be block diagonal")
    if not pattern_is_block_diagonal(inst.mask):
        raise PreconditionError("mask is not block diagonal with square "
                                "all-ones blocks")
    if np.any((inst.R != 0) & (inst.mask == 0)):
        raise PreconditionError("R has nonzeros outside the mask pattern")


@dataclass
class AsymptoticsReport:
    alphas: list
    max_gain_norm: list
    max_cost: list
    n_optima: list
    shrink_factor: float = 10.0
    solutions: list = field(default_factory=list)

    @property
    def gain_shrink(self):
        return self.max_gain_norm[0] / self.max_gain_norm[-1]

    @property
    def cost_shrink(self):
        return self.max_cost[0] / self.max_cost[-1]

    @property
    def passed(self):
        return (self.gain_shrink >= self.shrink_factor
                and self.cost_shrink >= self.shrink_factor)


def check_asymptotic_zero(inst, alpha_list=(1.0, 10.0, 100.0), samples=100,
                          cfg=None, rng_seed=0, scale_solver=True,
                          shrink_factor=10.0):
    """Multi-start at each damping level and record the largest gain norm
    (Frobenius) and largest cost among the local optima found.

    The check passes when both shrink by at least `shrink_factor` from the
    first to the last damping level. With `scale_solver` the local search
    uses ``cfg.scaled(alpha)`` so that heavily damped (flat) landscapes are
    still solved to comparable accuracy.
    """
    _check_block_pattern(inst)
    cfg = SolverConfig() if cfg is None else cfg
    rep = AsymptoticsReport([], [], [], [], shrink_factor=shrink_factor)
    for a in alpha_list:
        c = cfg.scaled(a) if scale_solver else cfg
        sols = multi_start(inst, a, samples, rng_seed, c)
        if not sols:
            raise SearchFailure(f"no local optimum found at alpha={a}")
        rep.alphas.append(float(a))
        rep.max_gain_norm.append(
            float(max(np.linalg.norm(s.K) for s in sols)))
        rep.max_cost.append(float(max(s.cost for s in sols)))
        rep.n_optima.append(len(sols))
        rep.solutions.append(sols)
    return rep


# -- Hessian on a ball -------------------------------------------------------

def sample_ball(inst, r, n_samples, rng):
    """Gains uniform in the Frobenius ball of radius `r` over free entries."""
    idx = np.flatnonzero(inst.mask.ravel())
    d = idx.size
    out = []
    for _ in range(n_samples):
        v = rng.standard_normal(d)
        v *= r * rng.uniform() ** (1.0 / d) / np.linalg.norm(v)
        K = np.zeros(inst.m * inst.n)
        K[idx] = v
        out.append(K.reshape(inst.m, inst.n))
    return out


def ball_is_stabilizing(inst, r, alpha):
    """Sufficient test that every gain with ``||K||_F <= r`` stabilizes.

    Uses the logarithmic 2-norm: ``mu(A - alpha I + B K) <= mu(A) - alpha
    + ||B|| r``.
    """
    mu = np.linalg.eigvalsh((inst.A + inst.A.T) / 2).max()
    return mu - alpha + np.linalg.norm(inst.B, 2) * r < 0


def check_hessian_pd(inst, r, alpha, n_samples=100, rng_seed=0):
    """Smallest projected-Hessian eigenvalue over gains sampled uniformly in
    the ball ``||K||_F <= r``.

    Raises
    ------
    AlphaTooSmallError
        If a sampled gain is not stabilizing at `alpha`.
    """
    rng = np.random.default_rng(rng_seed)
    worst = np.inf
    for K in sample_ball(inst, r, n_samples, rng):
        try:
            H = projected_hessian(inst, K, alpha)
        except InstabilityError as exc:
            raise AlphaTooSmallError(
                f"gain of norm {np.linalg.norm(K):.3g} is not stabilizing at "
                f"alpha={alpha}") from exc
        worst = min(worst, float(np.linalg.eigvalsh(H).min()))
    return worst


# -- covariance bounds -------------------------------------------------------

@dataclass(frozen=True)
class BoundsReport:
    lmin: float
    lmin_bound: float
    lmin_ok: bool
    lnorm: float
    lnorm_bound: float
    lnorm_applicable: bool
    lnorm_ok: bool

    @property
    def lmin_slack(self):
        return self.lmin - self.lmin_bound

    @property
    def lnorm_slack(self):
        return self.lnorm_bound - self.lnorm if self.lnorm_applicable else None

    @property
    def passed(self):
        return self.lmin_ok and (self.lnorm_ok or not self.lnorm_applicable)


def check_covariance_bounds(inst, K, alpha, rtol=1e-10):
    """Compare ``L`` against two bounds at a stabilizing gain.

    Lower bound, valid at every stabilizing gain::

        lambda_min(L) >= lambda_min(D0) / (2 alpha + 2 ||A + B K||)

    Upper bound, meaningful only when its denominator is positive::

        ||L|| <= tr(D0) / (2 alpha - 2n ||A|| - 2n ||B R^-1|| ||B^T|| ||P||)

    Norms are spectral norms. `rtol` absorbs round-off in the comparison.
    """
    K = np.asarray(K, dtype=float)
    pair = lyapunov_pair(inst, K, alpha)
    A, B, n = inst.A, inst.B, inst.n
    lmin = float(np.linalg.eigvalsh(pair.L).min())
    d0min = float(np.linalg.eigvalsh(inst.D0).min())
    lmin_bound = d0min / (2 * alpha + 2 * np.linalg.norm(A + B @ K, 2))
    lnorm = float(np.linalg.norm(pair.L, 2))
    denom = (2 * alpha - 2 * n * np.linalg.norm(A, 2)
             - 2 * n * np.linalg.norm(B @ np.linalg.inv(inst.R), 2)
             * np.linalg.norm(B.T, 2) * np.linalg.norm(pair.P, 2))
    applicable = bool(denom > 0)
    lnorm_bound = float(np.trace(inst.D0) / denom) if applicable else np.inf
    return BoundsReport(
        lmin, float(lmin_bound), bool(lmin >= lmin_bound * (1 - rtol)),
        lnorm, lnorm_bound, applicable,
        bool(applicable and lnorm <= lnorm_bound * (1 + rtol)))


# -- stable directions -------------------------------------------------------

T_SET_BASE = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [5.0, 1.0, -1.0]])
T_SET_B = np.array([0.0, 0.0, -1.0])
T_SET_C = np.array([0.85, 0.2, 0.2])


@dataclass(frozen=True)
class CounterexampleCertificate:
    """``A`` is stable while ``A + t0 H`` is not."""
    H: np.ndarray
    A: np.ndarray
    t0: float
    abscissa_A: float
    abscissa_At0H: float
    case: str = ''

    def verify(self, margin=MARGIN):
        a = spectral_abscissa(self.A)
        b = spectral_abscissa(self.A + self.t0 * self.H)
        return self.t0 > 0 and a < -margin and b > margin


def _certify(H, A, t0, case):
    a = spectral_abscissa(A)
    b = spectral_abscissa(A + t0 * H)
    if not (t0 > 0 and a < -MARGIN and b > MARGIN):
        raise UnsupportedStructureError(
            f"construction '{case}' failed verification "
            f"(t0={t0:.6g}, abscissas {a:.3e}, {b:.3e})")
    return CounterexampleCertificate(H, A, float(t0), a, b, case)


def stable_intervals(fn, lo, hi, step=1e-2, xtol=1e-6):
    """Maximal sub-intervals of ``[lo, hi]`` on which ``fn(t)`` is a stable
    matrix, located on a grid and refined by bisection to `xtol`.

    Returns a list of ``(left, right)`` pairs. An interval touching an end of
    the scan range is reported with that end unrefined.
    """
    ts = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    stable = [spectral_abscissa(fn(t)) < 0 for t in ts]

    def edge(t_in, t_out):
        # bisect between a stable and an unstable grid point
        while abs(t_out - t_in) > xtol:
            mid = 0.5 * (t_in + t_out)
            if spectral_abscissa(fn(mid)) < 0:
                t_in = mid
            else:
                t_out = mid
        return t_in

    out = []
    start = None
    for i, s in enumerate(stable):
        if s and start is None:
            start = ts[0] if i == 0 else edge(ts[i], ts[i - 1])
        if not s and start is not None:
            out.append((float(start), float(edge(ts[i - 1], ts[i]))))
            start = None
    if start is not None:
        out.append((float(start), float(ts[-1])))
    return out


def _t_set_matrix(t):
    return T_SET_BASE + t * np.outer(T_SET_B, T_SET_C)


def disconnected_t_set(lo=0.0, hi=20.0, step=1e-2):
    """Return ``(t1, t2)`` with ``t1 < t2``, the companion matrix plus
    ``t1 * b c^T`` stable and plus ``t2 * b c^T`` unstable, where ``t1`` lies
    in the first stable component and ``t2`` in the gap after it.
    """
    comps = stable_intervals(_t_set_matrix, lo, hi, step)
    if len(comps) < 2:
        raise SearchFailure(
            f"expected two stable components in [{lo}, {hi}], found "
            f"{len(comps)}", trace=comps)
    (a1, b1), (a2, _) = comps[0], comps[1]
    t1 = 0.5 * (a1 + b1)
    t2 = 0.5 * (b1 + a2)
    if not (spectral_abscissa(_t_set_matrix(t1)) < -MARGIN
            and spectral_abscissa(_t_set_matrix(t2)) > MARGIN):
        raise SearchFailure("midpoints failed verification", trace=comps)
    return t1, t2


def _core_rank_one():
    # A3 for H3 = diag(-1, 0, 0) via the rank-one T-set
    b, c = T_SET_B, T_SET_C
    kernel = scipy.linalg.null_space(c[None, :])
    P = np.column_stack([b, kernel])
    base = 5.0 * np.linalg.solve(P, T_SET_BASE @ P)
    t1, t2 = disconnected_t_set()
    H3 = np.diag([-1.0, 0.0, 0.0])
    return base + t1 * H3, t2 - t1


def _core_one_zero(h2):
    # A3 for H3 = diag(-1, h2, 0), h2 < 0
    H3 = np.diag([-1.0, h2, 0.0])
    G0 = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -h2], [2.0, 1.0, 0.0]])
    return G0 + 1.5 * H3, 1.5


def _core_full_rank(h2, h3):
    # A3 for H3 = diag(-1, h2, h3), -1 <= h2, h3 < 0, not both -1
    H3 = np.diag([-1.0, h2, h3])
    s, p = h2 + h3, h2 * h3
    lo = np.sqrt(p * s ** 2 / (-s + p) ** 3)
    hi = np.sqrt(4.0 / 27.0)
    a = 0.5 * (lo + hi)

    def G(t):
        return np.array([[0.0, -1.0, 0.0], [0.0, 0.0, h2],
                         [a * h3, h3, 0.0]]) + t * H3

    t_stable = a * (s - p) / s
    candidates = [np.sqrt(1.0 / 3.0), np.sqrt(p / (3 * (1 - h2) * (1 - h3)))]
    if spectral_abscissa(G(t_stable)) < -MARGIN:
        for tu in candidates:
            if tu > t_stable and spectral_abscissa(G(tu)) > MARGIN:
                return G(t_stable), tu - t_stable
    # fall back to scanning the t-line for a stable point followed by an
    # unstable one
    comps = stable_intervals(G, 0.0, 5.0, 1e-3)
    for (l1, r1), (l2, _) in zip(comps, comps[1:]):
        ts, tu = 0.5 * (l1 + r1), 0.5 * (r1 + l2)
        if (spectral_abscissa(G(ts)) < -MARGIN
                and spectral_abscissa(G(tu)) > MARGIN):
            return G(ts), tu - ts
    raise UnsupportedStructureError(
        f"no certificate found for diag(-1, {h2}, {h3})")


def _embed(core_A, perm, n):
    """Block-diagonal ``diag(core_A, -I)`` in the coordinates given by
    `perm` (core indices first)."""
    k = core_A.shape[0]
    Ap = -np.eye(n)
    Ap[:k, :k] = core_A
    A = np.empty((n, n))
    A[np.ix_(perm, perm)] = Ap
    return A


def _diagonal_case(H, d, tol):
    n = d.size
    if n < 3:
        raise UnsupportedStructureError(
            "no construction for 2x2 diagonal directions")
    if np.any(d > tol):
        raise UnsupportedStructureError(
            "directions with a positive eigenvalue are not handled")
    order = np.argsort(d, kind='stable')
    zero = [i for i in order if abs(d[i]) <= tol]
    neg = [i for i in order if d[i] < -tol]
    scale = -d[neg[0]]
    if len(zero) >= 2:
        core = [neg[0], zero[0], zero[1]]
        A3, t0 = _core_rank_one()
        case = 'diag_rank_one'
    elif len(zero) == 1:
        core = [neg[0], neg[1], zero[0]]
        A3, t0 = _core_one_zero(d[neg[1]] / scale)
        case = 'diag_one_zero'
    else:
        core = [order[0], order[-1], order[1]]
        A3, t0 = _core_full_rank(d[core[1]] / scale, d[core[2]] / scale)
        case = 'diag_full_rank'
    perm = core + [i for i in range(n) if i not in core]
    return _embed(A3, perm, n), t0 / scale, case


def complex_pair_parameters(h):
    """Offsets ``(u, w)`` for the block ``[[h, 1], [-1, h]]``, ``h < 0``.

    They must satisfy ``w > 0``, ``w**2 - u**2 > 1/4`` and
    ``h**2 / (1 + h**2) * w**2 - u**2 < 1/4``. With ``u = 0`` this is an
    interval for ``w**2``; ``w**2`` is taken at its midpoint.
    """
    if not h < 0:
        raise PreconditionError("h must be negative")
    u = 0.0
    w = np.sqrt((0.25 + (1 + h * h) / (4 * h * h)) / 2)
    # both inequality pairs must hold before any numerics
    assert w > 0 and -0.25 - u * u + w * w > 0
    assert -0.25 - u * u + h * h / (1 + h * h) * w * w < 0
    return u, w


def _two_by_two_case(H2, tol):
    """(A2, t0, case) for the leading block, or None if not canonical."""
    (p, q), (r, s) = H2
    if abs(p - s) > tol:
        return None
    h = 0.5 * (p + s)
    if h > tol:
        return None
    h = min(h, 0.0)
    if abs(r) <= tol and abs(q) > tol:
        # Jordan block [[h, q], [0, h]] = S [[h, 1], [0, h]] S^-1
        S = np.diag([1.0, 1.0 / q])
        Si = np.diag([1.0, q])
        if h < -tol:
            A = np.array([[4 * h, -2.0], [10 * h * h, -3 * h]])
            case = 'jordan'
        else:
            A = np.array([[-1.0, 0.0], [1.0, -1.0]])
            case = 'nilpotent'
        return S @ A @ Si, 2.0, case
    if abs(q + r) <= tol and abs(q) > tol:
        # rotation-type block [[h, f], [-f, h]]
        f = q
        S = np.diag([1.0, 1.0 if f > 0 else -1.0])
        f = abs(f)
        if h >= -tol:
            return S @ np.array([[-1.0, -4.0], [1.0, -1.0]]) @ S, 2.0 / f, \
                'rotation'
        hh = h / f
        u, w = complex_pair_parameters(hh)
        Hu = np.array([[hh, 1.0], [-1.0, hh]])
        G0 = np.array([[0.0, 0.5 + (u + w) * hh],
                       [-0.5 + (u - w) * hh, hh]])
        t_star = -0.5 - hh * w / (1 + hh * hh)
        eps = 1e-2
        while eps > 1e-12:
            t_a = -0.5 + eps
            if t_star > t_a and spectral_abscissa(G0 + t_a * Hu) < -MARGIN:
                break
            eps /= 2
        else:
            return None
        return S @ (G0 + t_a * Hu) @ S, (t_star - t_a) / f, 'complex_pair'
    return None


def stable_direction_counterexample(H, tol=1e-9):
    """Build a stable ``A`` and ``t0 > 0`` with ``A + t0 H`` unstable.

    Handled directions: a leading 2x2 block (with zeros below it) that is a
    Jordan block with eigenvalue h <= 0, or a rotation-type block
    ``[[h, f], [-f, h]]`` with h <= 0; diagonal matrices of size >= 3 with
    nonpositive entries that are not all equal; and matrices similar to
    such a diagonal through distinct real eigenvalues. Cores are padded to
    size n with ``-I``. Every returned certificate has been checked with
    eigenvalues.

    Raises
    ------
    NotACounterexampleError
        If ``H`` is (to `tol`) a nonpositive multiple of the identity.
    UnsupportedStructureError
        For any other form.
    """
    H = as_matrix(H, 'H', square=True)
    n = H.shape[0]
    if n < 2:
        raise PreconditionError("H must be at least 2x2")
    scale = max(1.0, np.abs(H).max())
    lam = np.trace(H) / n
    if np.abs(H - lam * np.eye(n)).max() <= tol * scale:
        if lam <= tol * scale:
            raise NotACounterexampleError(
                "H is a nonpositive multiple of the identity")
        raise UnsupportedStructureError(
            "positive multiples of the identity are not handled")
    atol = tol * scale
    offdiag = H - np.diag(np.diag(H))
    if np.abs(offdiag).max() <= atol:
        A, t0, case = _diagonal_case(H, np.diag(H).copy(), atol)
        return _certify(H, A, t0, case)
    if np.abs(H[2:, :2]).max(initial=0.0) <= atol:
        res = _two_by_two_case(H[:2, :2], atol)
        if res is not None:
            A2, t0, case = res
            return _certify(H, _embed(A2, list(range(n)), n), t0, case)
    if n >= 3:
        eigs, V = np.linalg.eig(H)
        if np.abs(eigs.imag).max() <= atol:
            eigs = eigs.real
            gaps = np.abs(eigs[:, None] - eigs[None, :]) + np.eye(n)
            if gaps.min() > 1e-6 * scale and eigs.max() <= atol:
                V = V.real
                D = np.diag(eigs)
                A_d, t0, case = _diagonal_case(D, eigs, atol)
                A = V @ A_d @ np.linalg.inv(V)
                return _certify(H, A, t0, 'similar_' + case)
    raise UnsupportedStructureError("no construction for this direction")
