"""
Numerical probes of the structural results
==========================================
"""

# %%
import numpy as np

from dampedodc.experiments import paper_4x4, random_instance
from dampedodc.local_search import multi_start
from dampedodc.theory import (check_asymptotic_zero, check_covariance_bounds,
                              check_damping_property, check_hessian_pd,
                              disconnected_t_set,
                              stable_direction_counterexample)

sys4 = paper_4x4()

# %% Cost falls with damping at any fixed stabilizing gain
K = np.diag([0.2, 0.3, 0.1, -0.1])
print(check_damping_property(sys4, K, np.linspace(0, 1, 6)).costs)

# %% Optima shrink towards zero under heavy damping
rep = check_asymptotic_zero(sys4, (1.0, 10.0, 100.0), samples=30)
print("max |K|", rep.max_gain_norm, "max J", rep.max_cost)

# %% Convexity on a ball once damping is large
inst = random_instance(3, 3, 0)
print("min Hessian eig at alpha=10:", check_hessian_pd(inst, 1.0, 10.0))

# %% Covariance lower bound at an optimum
s = multi_start(sys4, 0.5, 20, 0)[0]
b = check_covariance_bounds(sys4, s.K, 0.5)
print(f"lambda_min(L) = {b.lmin:.4f} >= {b.lmin_bound:.4f}")

# %% A stable A that one step along H destabilizes
for H in ([[-1.0, 1.0], [0.0, -1.0]], np.diag([-1.0, -0.5, -0.25])):
    c = stable_direction_counterexample(H)
    print(c.case, "t0 =", round(c.t0, 4), "abscissas",
          round(c.abscissa_A, 4), round(c.abscissa_At0H, 4))

# %% The set of stabilizing t along a rank-one direction has two pieces
print(disconnected_t_set())
