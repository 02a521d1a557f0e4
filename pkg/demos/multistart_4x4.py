"""
Several local optima of a decentralized gain
============================================

Random diagonal gains are polished by projected gradient descent and the
results are clustered.
"""

# %%
import numpy as np

from dampedodc.experiments import paper_4x4
from dampedodc.local_search import multi_start

sys4 = paper_4x4()
print("open-loop abscissa", max(np.linalg.eigvals(sys4.A).real))

# %%
sols = multi_start(sys4, alpha=0.0, n_samples=300, rng_seed=0)
for s in sols:
    print(f"J = {s.cost:9.4f}  |K| = {np.linalg.norm(s.K):.3f}  "
          f"diag K = {np.round(np.diag(s.K), 3)}")

# %% Heavier damping leaves a single optimum
sols = multi_start(sys4, alpha=0.6, n_samples=100, rng_seed=0)
print(len(sols), "optimum at alpha = 0.6")
