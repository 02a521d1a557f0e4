"""
Lyapunov equations and stability tests
======================================

The cost of a gain is a trace against the solution of a Lyapunov
equation, and every solve is guarded by a stability test.
"""

# %%
import numpy as np

from dampedodc.linalg import (commutation_matrix, is_stable, routh_hurwitz,
                              solve_lyapunov_obs, spectral_abscissa, vec)

# %% [markdown]
# A companion matrix of x^2 + 3x + 2 has eigenvalues -1 and -2.

# %%
A = np.array([[0.0, 1.0], [-2.0, -3.0]])
print("abscissa", spectral_abscissa(A))
print("stable", is_stable(A), "| Routh-Hurwitz", routh_hurwitz(np.poly(A)))

# %% Solve A^T X + X A + I = 0 two ways
X = solve_lyapunov_obs(A, np.eye(2))
X_bs = solve_lyapunov_obs(A, np.eye(2), method='schur')
print(X)
print("residual", np.abs(A.T @ X + X @ A + np.eye(2)).max())
print("kron vs Bartels-Stewart", np.abs(X - X_bs).max())

# %% vec(M^T) is a permutation of vec(M)
M = np.arange(6.0).reshape(2, 3)
P = commutation_matrix(2, 3)
print(np.array_equal(P @ vec(M), vec(M.T)))
