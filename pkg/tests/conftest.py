import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dampedodc.objective import ProblemInstance, closed_loop
from dampedodc.linalg import spectral_abscissa

settings.register_profile(
    'default', deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('default')


def scalar_instance(a=-1.0, b=1.0, q=1.0, r=1.0, d0=1.0):
    return ProblemInstance([[a]], [[b]], [[q]], [[r]], [[d0]], [[1.0]],
                           name='scalar')


def random_point(seed, n=None, m=None, mask_density=0.6, margin=0.3):
    """Random instance plus a stabilizing masked gain and a damping level.

    ``A`` is shifted so that the sampled gain leaves a stability margin of
    at least `margin` at the returned damping.
    """
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 5))
    m = m or int(rng.integers(1, 5))
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    Mq = rng.standard_normal((n, n))
    Mr = rng.standard_normal((m, m))
    Md = rng.standard_normal((n, n))
    Q = Mq @ Mq.T / n
    R = Mr @ Mr.T / m + np.eye(m)
    D0 = Md @ Md.T / n + 0.5 * np.eye(n)
    mask = (rng.uniform(size=(m, n)) < mask_density).astype(float)
    K = mask * rng.standard_normal((m, n)) * 0.5
    alpha = float(rng.uniform(0, 1))
    Acl_abs = spectral_abscissa(A + B @ K - alpha * np.eye(n))
    A = A - (max(Acl_abs, 0.0) + margin) * np.eye(n)
    inst = ProblemInstance(A, B, Q, R, D0, mask, name=f'rand{seed}')
    assert spectral_abscissa(closed_loop(inst, K, alpha)) < 0
    return inst, K, alpha


@pytest.fixture
def scalar():
    return scalar_instance()


@pytest.fixture(scope='session')
def paper():
    from dampedodc.experiments import paper_4x4
    return paper_4x4()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get('test_acceptance')
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section('acceptance criteria')
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
