"""Inexact-Newton building blocks: FD Jacobian action, FGMRES, forcing terms.

These are generic pieces: the residual map F acts on 2m x s matrices, the
Jacobian is only ever available through a finite-difference directional
derivative, and the inner linear solver is a flexible GMRES so that the
preconditioner may change from one application to the next.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


def fd_jacobian_action(F_eval, Phi, F_at_Phi, W_dir):
    """Directional derivative J_F(Phi) W by one-sided finite differences.

    The perturbation is eps = (1e-7 / ||W||_F) * max(1, ||Phi||_F), which
    scales with both the iterate and the direction; costs one evaluation
    of F because F(Phi) is passed in by the caller.  A zero direction
    returns the zero matrix.
    """
    norm_w = np.linalg.norm(W_dir)
    if norm_w == 0.0:
        return np.zeros_like(W_dir)
    eps = (1e-7 / norm_w) * max(1.0, np.linalg.norm(Phi))
    return (F_eval(Phi + eps * W_dir) - F_at_Phi) / eps


@dataclass
class FgmresOutcome:
    solution: np.ndarray
    iterations: int
    residual: float                      # true relative residual, recomputed at exit
    preconditioner_applications: int
    converged: bool


def fgmres(apply_A, apply_M, rhs, tol_rel, max_it=50):
    """Flexible GMRES with right preconditioning and no restarting.

    ``apply_M`` approximates A^{-1} and may differ between calls; the
    preconditioned directions are stored alongside the Arnoldi basis as
    usual for FGMRES.  The least-squares problem is updated with Givens
    rotations.  The returned residual is recomputed from the final
    iterate (one extra application of A), so it is the true relative
    residual rather than the rotation estimate.  A non-converged solve
    still returns its best iterate; the caller applies its own test.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.size
    norm_b = np.linalg.norm(rhs)
    if norm_b == 0.0:
        return FgmresOutcome(np.zeros(n), 0, 0.0, 0, True)

    V = np.zeros((n, max_it + 1))
    Z = np.zeros((n, max_it))
    H = np.zeros((max_it + 1, max_it))
    cs = np.zeros(max_it)
    sn = np.zeros(max_it)
    g = np.zeros(max_it + 1)
    g[0] = norm_b
    V[:, 0] = rhs / norm_b

    m_count = 0
    width = 0
    for j in range(max_it):
        z = apply_M(V[:, j])
        m_count += 1
        Z[:, j] = z
        w = apply_A(z)
        pre_norm = np.linalg.norm(w)

        coeffs = np.zeros(j + 1)
        for i in range(j + 1):
            hij = V[:, i] @ w
            coeffs[i] += hij
            w = w - hij * V[:, i]
        hnorm = np.linalg.norm(w)
        if hnorm < pre_norm / np.sqrt(2.0):
            for i in range(j + 1):
                hij = V[:, i] @ w
                coeffs[i] += hij
                w = w - hij * V[:, i]
            hnorm = np.linalg.norm(w)
        H[: j + 1, j] = coeffs
        H[j + 1, j] = hnorm

        for i in range(j):
            temp = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = temp
        denom = np.hypot(H[j, j], H[j + 1, j])
        if denom == 0.0:
            cs[j], sn[j] = 1.0, 0.0
        else:
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        width = j + 1
        breakdown = hnorm <= 1e-14 * pre_norm
        if breakdown or abs(g[j + 1]) <= tol_rel * norm_b:
            break
        V[:, j + 1] = w / hnorm

    y = scipy.linalg.solve_triangular(H[:width, :width], g[:width])
    x = Z[:, :width] @ y
    true_rel = np.linalg.norm(rhs - apply_A(x)) / norm_b
    return FgmresOutcome(x, width, true_rel, m_count, true_rel <= tol_rel)


@dataclass
class ForcingState:
    """Adaptive forcing-term controller for the inner FGMRES tolerance.

    ``stop_tol`` is frozen when the Newton solve starts (eps_abs +
    eps_rel * initial normalized residual) and the forcing term starts at
    its upper bound eta_max.
    """

    eta: float
    eta_max: float
    gamma: float
    stop_tol: float
    f_nrm_prev: float = np.inf

    def __post_init__(self):
        if not (0.0 <= self.eta <= self.eta_max < 1.0):
            raise ValueError("need 0 <= eta <= eta_max < 1")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if not self.stop_tol > 0.0:
            raise ValueError("stop_tol must be positive")


def update_forcing(state, f_nrm, f_nrm_prev):
    """Next forcing term from the residual-reduction ratio.

    eta <- min(eta_max, max(gamma eta_old^2, gamma rat^2,
    0.5 stop_tol / f_nrm)) with rat = f_nrm / f_nrm_prev.  The last term
    keeps the linear solver from oversolving once the Newton residual
    approaches the stopping tolerance.
    """
    rat = f_nrm / f_nrm_prev
    eta = min(
        state.eta_max,
        max(state.gamma * state.eta**2, state.gamma * rat**2, 0.5 * state.stop_tol / f_nrm),
    )
    state.eta = eta
    state.f_nrm_prev = f_nrm
    return eta
