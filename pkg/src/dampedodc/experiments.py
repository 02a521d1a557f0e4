"""Built-in instances, experiment configuration and file output.

A run reads a configuration (a YAML or JSON mapping), executes one scenario
and writes three files to the output directory:

``trajectories.csv``
    One row per tracked point, header
    ``run_id,trajectory_id,alpha,cost,grad_norm,iterations,status,
    dist_to_best,k_0_0,...,k_{m-1}_{n-1}`` with the gain flattened row-major.
    Reals use the shortest repr that round-trips. The ``theory`` scenario
    writes ``checks.csv`` instead.
``summary.json``
    Scenario-specific results.
``manifest.json``
    Run id, configuration echo, modelling assumptions, package version,
    seed, wall time and a SHA-256 digest of every other emitted file.
"""

import csv
import hashlib
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .continuation import (ALIVE, DampingSchedule, anneal_from_damped,
                           hysteresis, improve_by_damping, track_bundle)
from .exceptions import ConfigError, ODCError, PreconditionError
from .linalg import spectral_abscissa
from .local_search import LineSearchParams, SolverConfig, multi_start
from .objective import ProblemInstance

logger = logging.getLogger(__name__)

__all__ = ['paper_4x4', 'random_instance', 'BUILTINS', 'ExperimentConfig',
           'load_config', 'config_from_mapping', 'run', 'RunResult',
           'format_real', 'trajectory_header', 'read_trajectory_csv',
           'SCENARIOS', 'EXIT_OK', 'EXIT_CONFIG', 'EXIT_INFEASIBLE',
           'EXIT_SOLVER']

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4

SCENARIOS = ('multistart', 'sweep', 'hysteresis', 'improve', 'anneal',
             'theory')

QR_NOTE = "Q = I and R = I assumed (cost weights are not given for this system)"


def paper_4x4():
    """The 4-state benchmark with a diagonal (fully decentralized) gain."""
    A = np.array([[-1.0, 2.0, 0.0, 0.0],
                  [-2.0, 0.0, 1.0, 0.0],
                  [0.0, -1.0, 0.0, 2.0],
                  [0.0, 0.0, -2.0, 0.0]])
    B = np.array([[0.0, 1.0, 0.0, 0.0],
                  [-1.0, 0.0, 1.0, 0.0],
                  [0.0, -1.0, 0.0, 1.0],
                  [0.0, 0.0, -1.0, 0.0]])
    return ProblemInstance(A, B, np.eye(4), np.eye(4), np.eye(4), np.eye(4),
                           name='paper4x4', notes=(QR_NOTE,))


def random_instance(n, m, seed):
    """A and B with i.i.d. N(0, 1) entries; Q, R, D0 identities; diagonal
    mask (``mask[i, i] = 1`` for i < min(m, n))."""
    if n < 1 or m < 1:
        raise PreconditionError("n and m must be positive")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    return ProblemInstance(A, B, np.eye(n), np.eye(m), np.eye(n), np.eye(m, n),
                           name=f'random_{n}x{m}_seed{seed}',
                           notes=(QR_NOTE,))


BUILTINS = {'paper4x4': paper_4x4}


# -- configuration -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    scenario: str
    instance: dict
    run_id: str = 'run'
    seed: int = 0
    out: str = 'results'
    alpha_start: float = 0.0
    alpha_max: float = 0.6
    alpha_step: float = 0.002
    samples: int = 1000
    dedup_tol: float = 1e-2
    cost_rtol: float = 1e-4
    merge_tol: float = 1e-2
    start: str = 'worst'
    solver: dict = field(default_factory=dict)

    def solver_config(self):
        s = dict(self.solver)
        ls = LineSearchParams(
            armijo_c=float(s.pop('armijo_c', 1e-3)),
            shrink=float(s.pop('shrink', 0.5)),
            initial_step=float(s.pop('initial_step', 1.0)),
            max_backtracks=int(s.pop('max_backtracks', 60)))
        return SolverConfig(
            line_search=ls,
            grad_tol=float(s.pop('grad_tol', 1e-3)),
            max_iters=int(s.pop('max_iters', 100_000)),
            stability_tol=float(s.pop('stability_tol', 1e-9)))

    def build_instance(self):
        spec = self.instance
        if 'builtin' in spec or 'random' in spec:
            if 'builtin' in spec:
                inst = BUILTINS[spec['builtin']]()
            else:
                r = spec['random']
                inst = random_instance(int(r['n']), int(r['m']),
                                       int(r['seed']))
            over = {k: np.asarray(spec[k], dtype=float)
                    for k in ('Q', 'R', 'D0') if k in spec}
            if not over:
                return inst
            notes = tuple(n for n in inst.notes if n != QR_NOTE)
            if not {'Q', 'R'} <= set(over):
                notes += ("unspecified cost weights default to identity",)
            fields = {'A': inst.A, 'B': inst.B, 'Q': inst.Q, 'R': inst.R,
                      'D0': inst.D0, 'mask': inst.mask, **over}
            return ProblemInstance(**fields, name=inst.name, notes=notes)
        mats = spec['matrices']
        notes = (() if {'Q', 'R'} <= set(mats)
                 else ("unspecified cost weights default to identity",))
        return ProblemInstance.create(
            mats['A'], mats['B'], mats.get('Q'), mats.get('R'),
            mats.get('D0'), mats.get('mask'), name=spec.get('name', 'inline'),
            notes=notes)


_FLOATS = ('alpha_start', 'alpha_max', 'alpha_step', 'dedup_tol',
           'cost_rtol', 'merge_tol')
_SOLVER_KEYS = {'armijo_c', 'shrink', 'initial_step', 'max_backtracks',
                'grad_tol', 'max_iters', 'stability_tol'}


def config_from_mapping(data):
    """Validate a configuration mapping and build an `ExperimentConfig`.

    Raises `ConfigError` on unknown keys, bad types, a missing or unknown
    scenario, or an instance that cannot be constructed.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    data = dict(data)
    sched = data.pop('schedule', None) or {}
    ms = data.pop('multistart', None) or {}
    if not isinstance(sched, dict) or not isinstance(ms, dict):
        raise ConfigError("'schedule' and 'multistart' must be mappings")
    data.update(sched)
    data.update(ms)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if data.get('scenario') not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, "
                          f"got {data.get('scenario')!r}")
    inst = data.get('instance')
    if not isinstance(inst, dict) or not ({'builtin', 'random', 'matrices'}
                                          & set(inst)):
        raise ConfigError("instance must name a builtin, a random spec "
                          "{n, m, seed} or inline matrices")
    if 'builtin' in inst and inst['builtin'] not in BUILTINS:
        raise ConfigError(f"unknown builtin {inst['builtin']!r}")
    if 'random' in inst and not (isinstance(inst['random'], dict)
                                 and {'n', 'm', 'seed'} <= set(inst['random'])):
        raise ConfigError("random instance needs n, m and seed")
    solver = data.get('solver', {}) or {}
    if not isinstance(solver, dict) or set(solver) - _SOLVER_KEYS:
        raise ConfigError(f"solver keys must be among {sorted(_SOLVER_KEYS)}")
    try:
        for k in _FLOATS:
            if k in data:
                data[k] = float(data[k])
        for k in ('seed', 'samples'):
            if k in data:
                data[k] = int(data[k])
        data['run_id'] = str(data.get('run_id', 'run'))
        cfg = ExperimentConfig(**data)
        cfg.solver_config()
        cfg.build_instance()
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError, ODCError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if cfg.samples < 1:
        raise ConfigError("samples must be at least 1")
    if not cfg.alpha_step > 0:
        raise ConfigError("alpha_step must be positive")
    if cfg.alpha_start < 0 or cfg.alpha_max < 0:
        raise ConfigError("damping values must be nonnegative")
    if cfg.start not in ('worst', 'best'):
        raise ConfigError("start must be 'worst' or 'best'")
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return data


# -- CSV ---------------------------------------------------------------------

def format_real(x):
    """Shortest decimal string that parses back to the same double."""
    x = float(x)
    if math.isnan(x):
        return 'nan'
    return repr(x)


def trajectory_header(m, n):
    return (['run_id', 'trajectory_id', 'alpha', 'cost', 'grad_norm',
             'iterations', 'status', 'dist_to_best']
            + [f'k_{i}_{j}' for i in range(m) for j in range(n)])


def _row(run_id, tid, alpha, cost, gnorm, iters, status, dist, K):
    return ([run_id, str(tid), format_real(alpha), format_real(cost),
             format_real(gnorm), str(int(iters)), status, format_real(dist)]
            + [format_real(v) for v in np.asarray(K).ravel()])


def _trajectory_rows(run_id, traj):
    rows = []
    last = len(traj.points) - 1
    for i, p in enumerate(traj.points):
        status = traj.status if i == last else ALIVE
        rows.append(_row(run_id, traj.id, p.alpha, p.cost, p.grad_norm,
                         p.iterations, status, p.dist_to_best, p.K))
    return rows


def read_trajectory_csv(path):
    """Parse a trajectory CSV back into dicts with float gains."""
    with open(path, newline='') as fh:
        reader = csv.DictReader(fh)
        out = []
        for rec in reader:
            kcols = [c for c in reader.fieldnames if c.startswith('k_')]
            m = 1 + max(int(c.split('_')[1]) for c in kcols)
            n = 1 + max(int(c.split('_')[2]) for c in kcols)
            K = np.array([float(rec[c]) for c in kcols]).reshape(m, n)
            out.append({'run_id': rec['run_id'],
                        'trajectory_id': rec['trajectory_id'],
                        'alpha': float(rec['alpha']) if rec['alpha'] else None,
                        'cost': float(rec['cost']) if rec['cost'] else None,
                        'status': rec['status'], 'K': K})
        return out


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(header)
    w.writerows(rows)
    data = buf.getvalue().encode()
    Path(path).write_bytes(data)
    return data


def _write_json(path, obj):
    data = (json.dumps(obj, indent=2, sort_keys=True, default=_jsonable)
            + '\n').encode()
    Path(path).write_bytes(data)
    return data


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x)}")


# -- scenarios ---------------------------------------------------------------

class _Infeasible(Exception):
    pass


def _starts(inst, cfg, scfg, alpha):
    sols = multi_start(inst, alpha, cfg.samples, cfg.seed, scfg,
                       cfg.dedup_tol, cfg.cost_rtol)
    if not sols:
        raise _Infeasible(f"no stabilizing local optimum found at "
                          f"alpha={alpha} from {cfg.samples} samples")
    return sols


def _scenario_multistart(inst, cfg, scfg, rows):
    sols = _starts(inst, cfg, scfg, cfg.alpha_start)
    best = sols[0].K
    for i, s in enumerate(sols):
        rows.append(_row(cfg.run_id, i, s.alpha, s.cost, s.grad_norm,
                         s.iterations, s.status,
                         np.linalg.norm(s.K - best), s.K))
    return {'alpha': cfg.alpha_start, 'n_optima': len(sols),
            'costs': [s.cost for s in sols]}


def _scenario_sweep(inst, cfg, scfg, rows):
    sols = _starts(inst, cfg, scfg, cfg.alpha_start)
    sched = DampingSchedule.linear(cfg.alpha_start, cfg.alpha_max,
                                   cfg.alpha_step)
    bundle = track_bundle(inst, sols, sched, scfg, cfg.merge_tol)
    for t in bundle.trajectories:
        rows.extend(_trajectory_rows(cfg.run_id, t))
    alphas, best = bundle.best_cost_per_alpha()
    return {'n_starts': len(sols),
            'start_costs': [s.cost for s in sols],
            'alive_at_end': [t.id for t in bundle.alive()],
            'merge_events': [asdict(e) for e in bundle.merge_events],
            'lost': [t.id for t in bundle.trajectories if t.status == 'lost'],
            'best_cost_strictly_decreasing':
                bool(np.all(np.diff(best) < 0)) if sched.direction
                == 'increasing' else None,
            'best_cost_end': float(best[-1])}


def _pick_start(sols, which):
    return sols[-1] if which == 'worst' else sols[0]


def _scenario_hysteresis(inst, cfg, scfg, rows):
    sols = _starts(inst, cfg, scfg, cfg.alpha_start)
    start = _pick_start(sols, cfg.start)
    traj = hysteresis(inst, start, cfg.alpha_max, cfg.alpha_step, scfg)
    rows.extend(_trajectory_rows(cfg.run_id, traj))
    return {'start_cost': start.cost, 'final_alpha': traj.last.alpha,
            'final_cost': traj.last.cost, 'status': traj.status}


def _scenario_improve(inst, cfg, scfg, rows):
    sols = _starts(inst, cfg, scfg, 0.0)
    start = _pick_start(sols, cfg.start)
    res = improve_by_damping(inst, start.K, cfg.alpha_max, cfg.alpha_step,
                             scfg)
    if res.trajectory is not None:
        rows.extend(_trajectory_rows(cfg.run_id, res.trajectory))
    return {'start_cost': res.start_cost, 'final_cost': res.cost,
            'improved': res.improved, 'best_multistart_cost': sols[0].cost}


def _scenario_anneal(inst, cfg, scfg, rows):
    res = anneal_from_damped(inst, cfg.alpha_max, cfg.alpha_step, scfg,
                             cfg.seed, cfg.samples)
    if res.status == 'no_start':
        raise _Infeasible(f"no local optimum at alpha={cfg.alpha_max}")
    rows.extend(_trajectory_rows(cfg.run_id, res.trajectory))
    return {'status': res.status, 'final_cost': res.cost,
            'final_alpha': res.trajectory.last.alpha}


def _scenario_theory(inst, cfg, scfg, rows):
    from . import theory
    checks = []

    def add(name, passed, value='', bound='', slack=''):
        checks.append({'check': name, 'passed': bool(passed), 'value': value,
                       'bound': bound, 'slack': slack})

    sols = _starts(inst, cfg, scfg, cfg.alpha_start)
    grid = np.linspace(cfg.alpha_start, cfg.alpha_start + 1.0, 11)
    for i, s in enumerate(sols):
        d = theory.check_damping_property(inst, s.K, grid)
        add(f'damping_property[opt{i}]', d.passed, d.costs[-1], d.costs[0],
            d.costs[0] - d.costs[-1])
        b = theory.check_covariance_bounds(inst, s.K, s.alpha)
        add(f'lambda_min_L_bound[opt{i}]', b.lmin_ok, b.lmin, b.lmin_bound,
            b.lmin_slack)
    try:
        rep = theory.check_asymptotic_zero(inst, (1.0, 10.0, 100.0),
                                           min(cfg.samples, 100), scfg,
                                           cfg.seed)
        add('asymptotic_gain_shrink', rep.gain_shrink >= 10.0,
            rep.gain_shrink, 10.0, rep.gain_shrink - 10.0)
        add('asymptotic_cost_shrink', rep.cost_shrink >= 10.0,
            rep.cost_shrink, 10.0, rep.cost_shrink - 10.0)
    except PreconditionError as exc:
        add(f'asymptotic_zero (skipped: {exc})', True)
    for a in (10.0, 100.0, 1000.0):
        try:
            lam = theory.check_hessian_pd(inst, 1.0, a, 100, cfg.seed)
        except theory.AlphaTooSmallError:
            add(f'hessian_pd[alpha={a:g}]', False, 'alpha too small')
            continue
        add(f'hessian_pd[alpha={a:g}]', lam > 0, lam, 0.0, lam)
        if lam > 0:
            break
    t1, t2 = theory.disconnected_t_set()
    add('disconnected_t_set', True, t1, t2, t2 - t1)
    for label, H in _THEORY_DIRECTIONS:
        c = theory.stable_direction_counterexample(H)
        # value: abscissa of A + t0 H; bound: abscissa of A
        add(f'counterexample[{label}]', c.verify(), c.abscissa_At0H,
            c.abscissa_A, min(-c.abscissa_A, c.abscissa_At0H))
    for c in checks:
        rows.append([c['check'], 'pass' if c['passed'] else 'FAIL']
                    + [format_real(v) if isinstance(v, (float, int))
                       and not isinstance(v, bool) else str(v)
                       for v in (c['value'], c['bound'], c['slack'])])
    return {'checks': checks, 'all_passed': all(c['passed'] for c in checks)}


_THEORY_DIRECTIONS = [
    ('jordan', [[-1.0, 1.0], [0.0, -1.0]]),
    ('nilpotent', [[0.0, 1.0], [0.0, 0.0]]),
    ('rotation', [[0.0, 2.0], [-2.0, 0.0]]),
    ('complex_pair', [[-1.0, 1.0], [-1.0, -1.0]]),
    ('diag(-1,0,0)', np.diag([-1.0, 0.0, 0.0])),
    ('diag(-1,-1,0)', np.diag([-1.0, -1.0, 0.0])),
    ('diag(-1,-0.5,-0.25)', np.diag([-1.0, -0.5, -0.25])),
]

_SCENARIO_FUNCS = {'multistart': _scenario_multistart,
                   'sweep': _scenario_sweep,
                   'hysteresis': _scenario_hysteresis,
                   'improve': _scenario_improve,
                   'anneal': _scenario_anneal,
                   'theory': _scenario_theory}

CHECKS_HEADER = ['check', 'result', 'value', 'bound', 'slack']


@dataclass
class RunResult:
    exit_code: int
    files: list
    summary: dict
    message: str = ''


def run(config):
    """Execute one experiment and write its files.

    `config` is an `ExperimentConfig` or a raw mapping. Returns a
    `RunResult` whose ``exit_code`` is 0 on success, 2 for a configuration
    error (nothing written), 3 when the instance admits no stabilizing
    start, and 4 for an internal solver failure. On codes 3 and 4 the rows
    produced so far are written, followed by a ``FAILED`` marker row.
    """
    t_start = time.perf_counter()
    try:
        cfg = (config if isinstance(config, ExperimentConfig)
               else config_from_mapping(config))
    except ConfigError as exc:
        return RunResult(EXIT_CONFIG, [], {}, str(exc))
    inst = cfg.build_instance()
    scfg = cfg.solver_config()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    code, message = EXIT_OK, ''
    try:
        summary = _SCENARIO_FUNCS[cfg.scenario](inst, cfg, scfg, rows)
    except _Infeasible as exc:
        code, message, summary = EXIT_INFEASIBLE, str(exc), {}
    except (ODCError, np.linalg.LinAlgError, AssertionError) as exc:
        code, message, summary = EXIT_SOLVER, f"{type(exc).__name__}: {exc}", {}
    if cfg.scenario == 'theory':
        header, csv_name = CHECKS_HEADER, 'checks.csv'
    else:
        header, csv_name = trajectory_header(inst.m, inst.n), 'trajectories.csv'
    if code != EXIT_OK:
        rows.append([cfg.run_id] + [''] * 5 + ['FAILED']
                    + [''] * (len(header) - 7))
        summary = {'failed': True, 'message': message}
    files = {}
    files[csv_name] = _write_csv(out / csv_name, header, rows)
    summary = {'run_id': cfg.run_id, 'scenario': cfg.scenario,
               'instance': inst.name, **summary}
    files['summary.json'] = _write_json(out / 'summary.json', summary)
    manifest = {
        'run_id': cfg.run_id,
        'config': asdict(cfg),
        'instance': inst.to_dict(),
        'assumptions': list(inst.notes),
        'open_loop_abscissa': spectral_abscissa(inst.A),
        'version': __version__,
        'seed': cfg.seed,
        'wall_time_s': time.perf_counter() - t_start,
        'exit_code': code,
        'files': [{'path': name, 'sha256': hashlib.sha256(data).hexdigest()}
                  for name, data in files.items()],
    }
    _write_json(out / 'manifest.json', manifest)
    paths = [str(out / name) for name in files] + [str(out / 'manifest.json')]
    return RunResult(code, paths, summary, message)
