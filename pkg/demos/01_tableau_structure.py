"""Coefficient matrices of HBVM(k,s) and their structure.

Builds a few tableaux, shows the tridiagonal stage matrix emerging from
the weighted product W^T B I, and the rank deficiency of the derived
Butcher matrix when k > s.
"""

import numpy as np

from hbvm import build_tableau, xi_coefficient

np.set_printoptions(precision=6, suppress=True)

# The midpoint rule is the one-stage member of the family.
tab = build_tableau(1, 1)
print("HBVM(1,1):  c =", tab.c, " X =", tab.X.ravel(), " (implicit midpoint)")

# A generic member: 6 Gauss nodes feeding a 3-dimensional stage space.
tab = build_tableau(6, 3)
print("\nHBVM(6,3) stage matrix X (tridiagonal, (0,0) = 1/2, off-diagonals +-xi_i):")
print(tab.X)
print("xi_1..xi_3:", [round(xi_coefficient(i), 6) for i in (1, 2, 3)])

B = np.diag(tab.b)
print("\ndiscrete orthonormality  max|W^T B W - I| =", np.abs(tab.W.T @ B @ tab.W - np.eye(3)).max())
print("integral identity        max|I - W_ext X_hat| =", np.abs(tab.I_mat - tab.W_ext @ tab.X_hat).max())
print("stage-matrix identity    max|W^T B I - X| =", np.abs(tab.W.T @ B @ tab.I_mat - tab.X).max())

# The k x k Butcher matrix has numerical rank s: the k stage values are
# linear combinations of s polynomial coefficients.
A = tab.butcher_matrix()
sv = np.linalg.svd(A, compute_uv=False)
print("\nButcher matrix singular values:", sv)
print("numerical rank:", int(np.sum(sv > 1e-10 * sv[0])), "of", A.shape[0])
