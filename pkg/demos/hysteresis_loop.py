"""
Escaping a poor local optimum with damping
==========================================

Raise the damping, let the optimum slide, then lower it back. The return
path lands on a better optimum.
"""

# %%
from dampedodc.continuation import (anneal_from_damped, hysteresis,
                                    improve_by_damping)
from dampedodc.experiments import paper_4x4
from dampedodc.local_search import multi_start

sys4 = paper_4x4()
sols = multi_start(sys4, 0.0, 200, 0)
worst = sols[-1]

# %% The loop itself
traj = hysteresis(sys4, worst, alpha_peak=0.6, step=0.002)
n = len(traj.points) // 2
for k in (0, n // 2, n, n + n // 2, 2 * n):
    p = traj.points[k]
    print(f"alpha={p.alpha:.3f}  J={p.cost:.4f}")

# %% The same thing packaged
res = improve_by_damping(sys4, worst.K)
print("improved", res.improved, res.start_cost, "->", res.cost)

# %% Or start from the damped problem directly
res = anneal_from_damped(sys4, alpha_start=0.6, n_samples=20)
print(res.status, res.cost, "best multi-start", sols[0].cost)
