"""Hamiltonian problem definitions and the wave-equation discretizations.

A problem bundles the right-hand side f(y) = J grad H(y), the energy H,
and frozen-Jacobian actions/solves.  The two built-in problems are the
linear and semilinear wave equations on a uniform grid with homogeneous
Dirichlet boundaries, where every Jacobian solve reduces to a tridiagonal
factorization that is reused for the whole time step.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu


@dataclass(frozen=True)
class WaveGrid:
    """Uniform interior grid for a Dirichlet problem (N-1 unknowns)."""

    N: int
    L: float
    dx: float
    x: np.ndarray

    def __post_init__(self):
        self.x.setflags(write=False)


class FrozenJacobian:
    """Jacobian of f frozen at one state: its action and its solve."""

    def __init__(self, apply, solve):
        self.apply = apply
        self.solve = solve


@dataclass(repr=False)
class HamiltonianProblem:
    """Right-hand side, energy, and Jacobian access for y' = f(y).

    ``rhs_cols`` applies f column-wise to a (dim, k) block of states;
    ``frozen_jacobian_at`` factors once per call and the returned object
    is reused by the caller for the whole step.  ``jacobian_action_at``
    exposes the state-dependent Jacobian action for test oracles only.
    """

    dim: int
    rhs: Callable[[np.ndarray], np.ndarray]
    hamiltonian: Callable[[np.ndarray], float]
    frozen_jacobian_at: Callable[[np.ndarray], FrozenJacobian]
    rhs_cols: Callable[[np.ndarray], np.ndarray] = None
    jacobian_action_at: Optional[Callable] = None
    is_linear: bool = False
    apply_G: Optional[Callable] = None
    solve_G: Optional[Callable] = None
    grid: Optional[WaveGrid] = None
    initial_state: Optional[Callable[[], np.ndarray]] = None
    name: str = "problem"

    def __post_init__(self):
        if self.rhs_cols is None:
            # column-wise fallback; the built-in problems override this
            def rhs_cols(Y):
                out = np.empty_like(Y)
                for j in range(Y.shape[1]):
                    out[:, j] = self.rhs(Y[:, j])
                return out

            self.rhs_cols = rhs_cols


def _dirichlet_laplacian(n_interior, dx):
    main = np.full(n_interior, -2.0)
    off = np.ones(n_interior - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csc") / dx**2


def default_bump(center=0.0, sharpness=100.0):
    """Gaussian initial displacement exp(-sharpness (x - center)^2)."""
    return lambda x: np.exp(-sharpness * (x - center) ** 2)


def build_linear_wave(N, L=1.0, psi0=None, psi1=None):
    """Linear wave equation on [0, L], semi-discretized to y' = G y.

    State y = (u; p) with 2(N-1) unknowns, G = [[0, I], [L_N, 0]] for the
    standard second-difference Laplacian, and quadratic energy
    H = p^T p / 2 - u^T L_N u / 2.  Solves with G swap the blocks and use
    a tridiagonal factorization of L_N computed once.
    """
    if N < 3:
        raise ValueError("need N >= 3 interior resolution")
    dx = L / N
    x = dx * np.arange(1, N)
    m = N - 1
    lap = _dirichlet_laplacian(m, dx)
    lap_lu = splu(lap)
    psi0 = psi0 if psi0 is not None else default_bump(center=L / 2.0)
    psi1 = psi1 if psi1 is not None else (lambda xs: np.zeros_like(xs))

    def apply_G(w):
        return np.concatenate([w[m:], lap @ w[:m]], axis=0)

    def solve_G(w):
        return np.concatenate([lap_lu.solve(np.asarray(w[m:])), w[:m]], axis=0)

    def hamiltonian(y):
        u, p = y[:m], y[m:]
        return 0.5 * (p @ p) - 0.5 * (u @ (lap @ u))

    grid = WaveGrid(N=N, L=L, dx=dx, x=x)
    return HamiltonianProblem(
        dim=2 * m,
        rhs=apply_G,
        rhs_cols=apply_G,
        hamiltonian=hamiltonian,
        frozen_jacobian_at=lambda y: FrozenJacobian(apply_G, solve_G),
        jacobian_action_at=lambda y: apply_G,
        is_linear=True,
        apply_G=apply_G,
        solve_G=solve_G,
        grid=grid,
        initial_state=lambda: np.concatenate([psi0(x), psi1(x)]),
        name="linear-wave",
    )


def default_potential():
    """Cubic potential with f'(u) = 10 u^2, f''(u) = 20 u, f(u) = 10 u^3 / 3."""
    return {
        "fprime": lambda u: 10.0 * u**2,
        "fsecond": lambda u: 20.0 * u,
        "f": lambda u: (10.0 / 3.0) * u**3,
    }


def build_semilinear_wave(N, L=1.0, potential=None, psi0=None, psi1=None):
    """Semilinear wave equation on [-L, L] with a local potential.

    rhs(y) = G y + (0; -f'(u)) and H = p^T p / 2 - u^T L_N u / 2 +
    sum_j f(u_j), which together are Hamiltonian-consistent.  The frozen
    Jacobian is [[0, I], [M, 0]] with M = L_N - diag(f''(u_n)) (the exact
    derivative of the momentum equation), refactored whenever the caller
    asks for a new state.
    """
    if N < 3:
        raise ValueError("need N >= 3 interior resolution")
    pot = dict(default_potential())
    if potential:
        pot.update(potential)
    fprime, fsecond, fpot = pot["fprime"], pot["fsecond"], pot["f"]
    dx = 2.0 * L / N
    x = -L + dx * np.arange(1, N)
    m = N - 1
    lap = _dirichlet_laplacian(m, dx)
    psi0 = psi0 if psi0 is not None else default_bump()
    psi1 = psi1 if psi1 is not None else (lambda xs: np.zeros_like(xs))

    def rhs(y):
        u, p = y[:m], y[m:]
        return np.concatenate([p, lap @ u - fprime(u)], axis=0)

    def hamiltonian(y):
        u, p = y[:m], y[m:]
        return 0.5 * (p @ p) - 0.5 * (u @ (lap @ u)) + np.sum(fpot(u))

    def momentum_block(y):
        # d/du of (L_N u - f'(u)) at the given state
        return lap - sp.diags(fsecond(y[:m]), format="csc")

    def frozen_jacobian_at(y):
        M = momentum_block(y).tocsc()
        M_lu = splu(M)

        def apply(w):
            return np.concatenate([w[m:], M @ w[:m]], axis=0)

        def solve(w):
            return np.concatenate([M_lu.solve(np.asarray(w[m:])), w[:m]], axis=0)

        return FrozenJacobian(apply, solve)

    def jacobian_action_at(y):
        M = momentum_block(y)
        return lambda w: np.concatenate([w[m:], M @ w[:m]], axis=0)

    grid = WaveGrid(N=N, L=L, dx=dx, x=x)
    return HamiltonianProblem(
        dim=2 * m,
        rhs=rhs,
        rhs_cols=rhs,
        hamiltonian=hamiltonian,
        frozen_jacobian_at=frozen_jacobian_at,
        jacobian_action_at=jacobian_action_at,
        is_linear=False,
        grid=grid,
        initial_state=lambda: np.concatenate([psi0(x), psi1(x)]),
        name="semilinear-wave",
    )


def build_linear_from_matrix(G, hamiltonian=None, name="linear-matrix"):
    """Linear Hamiltonian problem y' = G y from a dense invertible matrix.

    When no energy is supplied it is reconstructed from G = J S as
    H(y) = y^T S y / 2 with S = -J G, which is exact whenever G really is
    Hamiltonian.  Mostly a convenience for oscillators and synthetic
    test problems.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if n % 2 != 0:
        raise ValueError("Hamiltonian systems have even dimension")
    m = n // 2
    if hamiltonian is None:
        J = np.zeros((n, n))
        J[:m, m:] = np.eye(m)
        J[m:, :m] = -np.eye(m)
        S = -J @ G
        hamiltonian = lambda y: 0.5 * (y @ (S @ y))
    lu_piv = scipy.linalg.lu_factor(G)

    def solve_G(w):
        return scipy.linalg.lu_solve(lu_piv, np.asarray(w))

    apply_G = lambda w: G @ w
    return HamiltonianProblem(
        dim=n,
        rhs=apply_G,
        rhs_cols=apply_G,
        hamiltonian=hamiltonian,
        frozen_jacobian_at=lambda y: FrozenJacobian(apply_G, solve_G),
        jacobian_action_at=lambda y: apply_G,
        is_linear=True,
        apply_G=apply_G,
        solve_G=solve_G,
        initial_state=None,
        name=name,
    )


def hamiltonian_series(problem, snapshots):
    """Energy evaluated on each snapshot (rows or list of state vectors)."""
    snapshots = np.atleast_2d(np.asarray(snapshots, dtype=float))
    return np.array([problem.hamiltonian(y) for y in snapshots])
