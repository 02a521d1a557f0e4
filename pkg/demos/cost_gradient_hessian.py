"""
Cost, gradient and Hessian of a structured gain
===============================================

A scalar plant has everything in closed form, so it is a good place to
see the pieces before moving to the 4-state system.
"""

# %%
import numpy as np

from dampedodc import ProblemInstance, cost, gradient, hessian
from dampedodc.experiments import paper_4x4

# %% Scalar plant a = -1, b = 1 with unit weights
inst = ProblemInstance.create([[-1.0]], [[1.0]])
for alpha in (0.0, 0.5, 1.0):
    print(f"alpha={alpha}: J(0) = {cost(inst, [[0.0]], alpha):.4f}"
          f"  (closed form {1 / (2 * (1 + alpha)):.4f})")

# %% The Riccati gain is stationary and the curvature at k = 0 is 2
k_star = -(np.sqrt(2.0) - 1.0)
print("grad at k*", gradient(inst, [[k_star]])[0, 0])
print("hessian at 0", hessian(inst, [[0.0]])[0, 0])

# %% Finite differences on the 4-state system with a diagonal gain
sys4 = paper_4x4()
K = np.diag([0.2, 0.3, 0.1, -0.1])
G = gradient(sys4, K)
h = 1e-6
E = np.zeros((4, 4))
E[1, 1] = h
fd = (cost(sys4, K + E) - cost(sys4, K - E)) / (2 * h)
print("dJ/dk11 analytic", G[1, 1], "central difference", fd)
