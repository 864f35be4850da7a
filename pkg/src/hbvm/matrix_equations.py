"""Sylvester-equation solvers for Z E + E R = U V^T with operator Z.

Z is large (2m x 2m) and available only through its action (optionally its
inverse action); R is a small dense s x s matrix and the right-hand side
has rank r <= s.  Three routes are provided: a dense solve for projected
problems, a one-sided polynomial Krylov projection for rank-1 right-hand
sides, and a block extended Krylov projection that also uses Z^{-1}.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import NotConverged, SingularProjectedProblem, SolverFailure

# Projected problems stay dense-Kronecker up to this many unknowns.
_KRON_LIMIT = 40_000

# A candidate basis column is deflated when orthogonalization removes all
# but this fraction of its original norm.
_DEFLATION_RTOL = 1e-12


@dataclass
class SylvesterProblem:
    """Operator form of Z E + E R = U V^T.

    ``apply_Z`` (and, when present, ``apply_Z_inverse``) must accept both
    a vector of shape (dim,) and a block of shape (dim, j).
    """

    apply_Z: Callable[[np.ndarray], np.ndarray]
    R: np.ndarray
    U: np.ndarray
    V: np.ndarray
    dim: int
    small_dim: int
    apply_Z_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.U.ndim != 2 or self.V.ndim != 2:
            raise ValueError("right-hand side factors U, V must be 2-D")
        r = self.U.shape[1]
        if self.V.shape[1] != r:
            raise ValueError("U and V must have the same number of columns")
        # s <= dim in the intended PDE regime, but desk-scale problems may
        # legitimately carry more stages than unknowns
        if not (r <= self.small_dim and r <= self.dim):
            raise ValueError("need rank r <= s and r <= dim")
        if not (np.isfinite(self.U).all() and np.isfinite(self.V).all()):
            raise ValueError("right-hand side factors must be finite")

    @property
    def rank(self):
        return self.U.shape[1]

    def rhs_scale(self):
        return np.linalg.norm(self.U) * np.linalg.norm(self.V)

    def residual(self, E):
        """True residual ||Z E + E R - U V^T||_F, using fresh Z applications."""
        return np.linalg.norm(self.apply_Z(E) + E @ self.R - self.U @ self.V.T)


@dataclass
class KrylovStats:
    iterations: int = 0
    basis_size: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    breakdown: bool = False
    basis: Optional[np.ndarray] = None   # kept for diagnostics/tests


def solve_sylvester_dense(H, R, C):
    """Solve the dense equation H Y + Y R = C for small H (p x p), R (q x q).

    Uses the Kronecker-vectorized direct solve up to p*q = 40 000 unknowns
    and the Schur-based scipy routine beyond.  Raises
    :class:`SingularProjectedProblem` when the system is numerically
    singular (spectral overlap between H and -R).
    """
    H = np.asarray(H, dtype=float)
    R = np.asarray(R, dtype=float)
    C = np.asarray(C, dtype=float)
    p, q = C.shape
    if H.shape != (p, p) or R.shape != (q, q):
        raise ValueError("inconsistent shapes for the projected Sylvester solve")
    try:
        if p * q <= _KRON_LIMIT:
            K = np.kron(np.eye(q), H) + np.kron(R.T, np.eye(p))
            Y = np.linalg.solve(K, C.flatten(order="F")).reshape((p, q), order="F")
        else:
            Y = scipy.linalg.solve_sylvester(H, R, C)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularProjectedProblem(f"projected Sylvester system is singular: {exc}") from exc
    residual = np.linalg.norm(H @ Y + Y @ R - C)
    bound = 1e-12 * (
        np.linalg.norm(H) * np.linalg.norm(Y)
        + np.linalg.norm(Y) * np.linalg.norm(R)
        + np.linalg.norm(C)
    )
    if not np.isfinite(residual) or residual > bound:
        raise SingularProjectedProblem(
            f"projected Sylvester residual {residual:.3e} exceeds backward-stable bound {bound:.3e}"
        )
    return Y


def _orthogonalize(w, basis, ncols):
    """Modified Gram-Schmidt of w against basis[:, :ncols].

    One extra pass is run when the norm drops by more than 1/sqrt(2),
    which keeps the basis orthonormal to ~1e-14 even for ill-conditioned
    candidate directions.  Returns (w, coeffs, new_norm).
    """
    coeffs = np.zeros(ncols)
    norm_before = np.linalg.norm(w)
    for i in range(ncols):
        hij = basis[:, i] @ w
        coeffs[i] += hij
        w = w - hij * basis[:, i]
    norm_after = np.linalg.norm(w)
    if norm_after < norm_before / np.sqrt(2.0):
        for i in range(ncols):
            hij = basis[:, i] @ w
            coeffs[i] += hij
            w = w - hij * basis[:, i]
        norm_after = np.linalg.norm(w)
    return w, coeffs, norm_after


def krylov_sylvester_poly(prob, tol, max_it=100):
    """One-sided polynomial Krylov projection for a rank-1 right-hand side.

    Builds the Arnoldi basis of K_j(Z, u) with modified Gram-Schmidt,
    solves the projected equation H_j Y + Y R = beta e_1 v^T at every
    step and stops when rho_j = |h_{j+1,j}| * ||e_j^T Y_j||_F drops below
    tol * ||u|| * ||v||, or on breakdown (solution exact in the subspace).
    """
    if prob.rank != 1:
        raise ValueError("the polynomial projection handles rank-1 right-hand sides")
    u = prob.U[:, 0]
    v = prob.V[:, 0]
    scale = np.linalg.norm(u) * np.linalg.norm(v)
    stats = KrylovStats()
    if scale == 0.0:
        stats.converged = True
        stats.basis = np.zeros((prob.dim, 0))
        return np.zeros((prob.dim, prob.small_dim)), stats

    beta = np.linalg.norm(u)
    basis = np.zeros((prob.dim, max_it + 1))
    basis[:, 0] = u / beta
    H = np.zeros((max_it + 1, max_it))
    E = None
    for j in range(1, max_it + 1):
        w = prob.apply_Z(basis[:, j - 1])
        pre_norm = np.linalg.norm(w)
        w, H[:j, j - 1], hnorm = _orthogonalize(w, basis, j)
        H[j, j - 1] = hnorm
        breakdown = hnorm <= 1e-14 * pre_norm

        rhs_proj = np.zeros((j, prob.small_dim))
        rhs_proj[0, :] = beta * v
        Y = solve_sylvester_dense(H[:j, :j], prob.R, rhs_proj)
        rho = hnorm * np.linalg.norm(Y[j - 1, :])
        stats.iterations = j
        stats.basis_size = j
        stats.residual_history.append(rho)
        E = basis[:, :j] @ Y

        if breakdown:
            stats.breakdown = True
            stats.converged = True
            break
        if rho < tol * scale:
            stats.converged = True
            break
        basis[:, j] = w / hnorm

    stats.basis = basis[:, : stats.basis_size].copy()
    if not stats.converged:
        raise NotConverged(
            f"polynomial Krylov projection: residual {stats.residual_history[-1]:.3e} "
            f"after {max_it} iterations (target {tol * scale:.3e})",
            result=E,
            stats=stats,
            residual=stats.residual_history[-1],
        )
    return E, stats


def _accept_block(candidates, tags, basis, nb):
    """Orthogonalize candidate columns against basis[:, :nb] and each other.

    Columns that lose all but a 1e-12 fraction of their norm are deflated
    (numerically dependent directions); the surviving columns come back
    orthonormal together with their power/inverse tags.
    """
    accepted_tags = []
    col = nb
    for idx in range(candidates.shape[1]):
        if col >= basis.shape[1]:
            break  # scratch space exhausted; the basis already spans the space
        w = candidates[:, idx].copy()
        orig = np.linalg.norm(w)
        if orig == 0.0:
            continue
        w, _, nrm = _orthogonalize(w, basis, col)
        if nrm <= _DEFLATION_RTOL * orig:
            continue
        basis[:, col] = w / nrm
        accepted_tags.append(tags[idx])
        col += 1
    return col - nb, accepted_tags


def krylov_sylvester_extended(prob, tol, max_it=100):
    """Block extended Krylov projection using both Z and Z^{-1} actions.

    Grows EK_i(Z, U) = span{U, Z^{-1}U, ZU, Z^{-2}U, ...} two blocks per
    iteration, keeps Z applied to the whole basis cached so the projected
    matrix T = V^T Z V and the residual come from matrix products alone,
    and stops under the same tol * ||U||_F ||V||_F test as the polynomial
    variant.  Numerically dependent candidate columns are deflated; when
    both new blocks collapse the subspace is invariant and the solve is
    exact there.  The true residual is recomputed from fresh Z
    applications at acceptance and must stay within 1.1x the estimate.
    """
    if prob.apply_Z_inverse is None:
        raise ValueError("the extended projection needs apply_Z_inverse")
    U, V = prob.U, prob.V
    r = prob.rank
    scale = prob.rhs_scale()
    stats = KrylovStats()
    if scale == 0.0:
        stats.converged = True
        stats.basis = np.zeros((prob.dim, 0))
        return np.zeros((prob.dim, prob.small_dim)), stats

    max_cols = min(prob.dim, 2 * r * (max_it + 1))
    basis = np.zeros((prob.dim, max_cols))
    ZV = np.zeros((prob.dim, max_cols))
    nb = 0

    candidates = np.hstack([U, prob.apply_Z_inverse(U)])
    tags = ["pow"] * r + ["inv"] * r

    def project_and_solve():
        Vb = basis[:, :nb]
        T = Vb.T @ ZV[:, :nb]
        Y = solve_sylvester_dense(T, prob.R, (Vb.T @ U) @ V.T)
        residual_mat = ZV[:, :nb] @ Y + (Vb @ Y) @ prob.R - U @ V.T
        return Vb @ Y, np.linalg.norm(residual_mat)

    E = None
    est = np.inf
    for it in range(1, max_it + 1):
        n_new, new_tags = _accept_block(candidates, tags, basis, nb)
        if n_new == 0:
            # both blocks numerically dependent: the space is Z-invariant
            # and the projected solution is exact in it
            stats.breakdown = True
            E, est = project_and_solve()
            stats.residual_history.append(est)
            stats.converged = True
            break
        ZV[:, nb:nb + n_new] = prob.apply_Z(basis[:, nb:nb + n_new])
        nb += n_new

        stats.iterations = it
        stats.basis_size = nb
        try:
            E, est = project_and_solve()
        except SingularProjectedProblem:
            if it == max_it:
                raise
            # transient spectral overlap of the projected problem; keep
            # enlarging the space and try again next iteration
            candidates, tags = _next_candidates(prob, basis, ZV, nb, n_new, new_tags)
            continue

        stats.residual_history.append(est)
        if est < tol * scale:
            stats.converged = True
            break
        candidates, tags = _next_candidates(prob, basis, ZV, nb, n_new, new_tags)

    stats.basis = basis[:, :nb].copy()
    if not stats.converged:
        raise NotConverged(
            f"extended Krylov projection: residual {est:.3e} after {max_it} iterations "
            f"(target {tol * scale:.3e})",
            result=E,
            stats=stats,
            residual=est,
        )

    true_res = prob.residual(E)
    if true_res > 1.1 * est + 1e-12 * scale:
        raise SolverFailure(
            f"extended Krylov estimate {est:.3e} inconsistent with true residual {true_res:.3e}"
        )
    return E, stats


def _next_candidates(prob, basis, ZV, nb, n_new, new_tags):
    """Candidate block for the next extended-Krylov iteration.

    Power directions advance through the cached Z images of the newest
    basis columns; inverse directions take one more Z^{-1} application.
    """
    new_cols = range(nb - n_new, nb)
    pow_idx = [c for c, t in zip(new_cols, new_tags) if t == "pow"]
    inv_idx = [c for c, t in zip(new_cols, new_tags) if t == "inv"]
    blocks = []
    tags = []
    if pow_idx:
        blocks.append(ZV[:, pow_idx])
        tags += ["pow"] * len(pow_idx)
    if inv_idx:
        blocks.append(prob.apply_Z_inverse(basis[:, inv_idx]))
        tags += ["inv"] * len(inv_idx)
    if not blocks:
        return np.zeros((prob.dim, 0)), []
    return np.hstack(blocks), tags


def lowrank_factor(M, rel_tol):
    """Minimal-rank factorization M = F1 F2^T with Frobenius tolerance.

    Column-pivoted QR of the (small) transpose, truncated at the first
    rank whose tail satisfies ||M - F1 F2^T||_F <= rel_tol ||M||_F.
    The zero matrix returns rank 0.
    """
    M = np.asarray(M, dtype=float)
    n, s = M.shape
    total = np.linalg.norm(M)
    if total == 0.0:
        return np.zeros((n, 0)), np.zeros((s, 0)), 0
    Q, Rf, piv = scipy.linalg.qr(M.T, mode="economic", pivoting=True)
    # tail_sq[r] = ||R[r:, :]||_F^2, the exact truncation error at rank r
    row_sq = np.sum(Rf**2, axis=1)
    tail_sq = np.concatenate([np.cumsum(row_sq[::-1])[::-1], [0.0]])
    limit = (rel_tol * total) ** 2
    r = next(rank for rank in range(len(row_sq) + 1) if tail_sq[rank] <= limit)
    F1 = np.zeros((n, r))
    F1[piv, :] = Rf[:r, :].T
    F2 = Q[:, :r]
    return F1, F2, r
