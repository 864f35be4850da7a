"""Polynomial vs extended Krylov projection on a stiff Sylvester equation.

The equation Z E + E R = u v^T with a wide-spectrum Z is where the
polynomial space crawls and the extended space (which also works with
Z^{-1} u directions) shines.
"""

import numpy as np

from hbvm import NotConverged, SylvesterProblem, krylov_sylvester_extended, krylov_sylvester_poly

rng = np.random.default_rng(3)
dim, s = 500, 2
spectrum = np.logspace(0, 6, dim)          # condition number 1e6
R = np.array([[0.5, -0.1], [0.1, 0.2]])
u = rng.standard_normal(dim)
v = rng.standard_normal(s)

common = dict(R=R, U=u[:, None], V=v[:, None], dim=dim, small_dim=s)
prob = SylvesterProblem(
    apply_Z=lambda w: (spectrum * w.T).T,
    apply_Z_inverse=lambda w: (w.T / spectrum).T,
    **common,
)

for tol in (1e-6, 1e-8, 1e-10):
    E_ext, st_ext = krylov_sylvester_extended(prob, tol, max_it=300)
    try:
        _, st_poly = krylov_sylvester_poly(prob, tol, max_it=dim - 1)
        poly = f"{st_poly.iterations:4d} iterations"
    except NotConverged as exc:
        poly = f"no convergence in {exc.stats.iterations} iterations"
    print(f"tol {tol:.0e}:  extended {st_ext.iterations:3d} iterations "
          f"(basis {st_ext.basis_size:3d})   polynomial {poly}")

E, stats = krylov_sylvester_extended(prob, 1e-10, max_it=300)
print("\nextended solver residual history:")
for j, rho in enumerate(stats.residual_history, start=1):
    print(f"  iteration {j:2d}: residual {rho:.3e}")
print("true residual of returned solution:", prob.residual(E))
