"""HBVM(k,s) coefficient matrices from shifted Legendre polynomials.

The method data is a Gauss-Legendre rule with k nodes on [0,1] together
with evaluations and integrals of the orthonormal shifted Legendre basis
at those nodes.  Everything downstream (stage equations, Sylvester forms,
preconditioners) consumes the immutable :class:`HbvmTableau` built here.
"""

from dataclasses import dataclass

import numpy as np


def xi_coefficient(i):
    """Off-diagonal entry xi_i = 1 / (2 sqrt(4 i^2 - 1)) of the stage matrix."""
    return 1.0 / (2.0 * np.sqrt(4.0 * i * i - 1.0))


def _legendre_table(max_ell, x):
    """Values of the orthonormal shifted Legendre polynomials P_0..P_max_ell.

    Returns an array of shape (max_ell + 1, len(x)).  Uses the three-term
    recurrence on t = 2x - 1 and applies the orthonormal scale sqrt(2l+1)
    at the end; stable for every degree used here (l <= ~25).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = 2.0 * x - 1.0
    table = np.empty((max_ell + 1, x.size))
    table[0] = 1.0
    if max_ell >= 1:
        table[1] = t
    for n in range(1, max_ell):
        table[n + 1] = ((2 * n + 1) * t * table[n] - n * table[n - 1]) / (n + 1)
    scale = np.sqrt(2.0 * np.arange(max_ell + 1) + 1.0)
    return table * scale[:, None]


def shifted_legendre(ell, x):
    """Evaluate the orthonormal shifted Legendre polynomial P_ell on [0,1].

    Normalised so that the basis is orthonormal for the unit weight on
    [0,1]; the sign convention is P_ell(1) > 0.
    """
    if ell < 0:
        raise ValueError("polynomial degree must be non-negative")
    values = _legendre_table(ell, x)[ell]
    return float(values[0]) if np.ndim(x) == 0 else values


def shifted_legendre_integral(ell, c):
    """Integral of P_ell from 0 to c.

    For ell = 0 the integral is c; for ell >= 1 it telescopes into
    neighbouring polynomial values,

        int_0^c P_ell = xi_{ell+1} P_{ell+1}(c) - xi_ell P_{ell-1}(c),

    which is exact and avoids quadrature.
    """
    if ell < 0:
        raise ValueError("polynomial degree must be non-negative")
    if ell == 0:
        c = np.asarray(c, dtype=float)
        return float(c) if c.ndim == 0 else c.copy()
    table = _legendre_table(ell + 1, c)
    values = xi_coefficient(ell + 1) * table[ell + 1] - xi_coefficient(ell) * table[ell - 1]
    return float(values[0]) if np.ndim(c) == 0 else values


def gauss_legendre_rule(k):
    """Nodes and weights of the k-point Gauss-Legendre rule on [0,1].

    Exact for polynomials of degree <= 2k - 1; nodes strictly increasing
    in (0,1), weights positive.
    """
    if k < 1:
        raise ValueError("a Gauss-Legendre rule needs at least one node")
    nodes, weights = np.polynomial.legendre.leggauss(k)
    return (nodes + 1.0) / 2.0, weights / 2.0


def _stage_matrix(s):
    """The s x s tridiagonal stage matrix: (0,0) = 1/2, +-xi_i off-diagonals."""
    X = np.zeros((s, s))
    X[0, 0] = 0.5
    for i in range(1, s):
        X[i, i - 1] = xi_coefficient(i)
        X[i - 1, i] = -xi_coefficient(i)
    return X


def _stage_matrix_ext(s):
    """The (s+1) x s extension of the stage matrix, last row = xi_s e_s^T."""
    X_hat = np.zeros((s + 1, s))
    X_hat[:s, :] = _stage_matrix(s)
    X_hat[s, s - 1] = xi_coefficient(s)
    return X_hat


@dataclass(frozen=True)
class HbvmTableau:
    """All coefficient matrices of an HBVM(k,s) scheme.

    Immutable after construction; safe to share across concurrent runs.
    """

    s: int
    k: int
    c: np.ndarray        # k quadrature nodes in (0,1)
    b: np.ndarray        # k positive quadrature weights
    W: np.ndarray        # k x s, W[i, j] = P_j(c_i)
    W_ext: np.ndarray    # k x (s+1), one extra polynomial degree
    I_mat: np.ndarray    # k x s, integrals of P_j from 0 to c_i
    X: np.ndarray        # s x s stage matrix
    X_hat: np.ndarray    # (s+1) x s extended stage matrix
    xi: np.ndarray       # xi_1 .. xi_s

    def __post_init__(self):
        for field in ("c", "b", "W", "W_ext", "I_mat", "X", "X_hat", "xi"):
            getattr(self, field).setflags(write=False)

    @property
    def dim_ratio(self):
        return self.k - self.s

    def butcher_matrix(self):
        """Derived k x k Butcher matrix A = I_mat W^T B (rank s when k > s)."""
        return (self.I_mat @ self.W.T) * self.b[None, :]

    def weighted_basis(self):
        """W^T b, the projection of the quadrature weights (equals e_1)."""
        return self.W.T @ self.b


def build_tableau(k, s):
    """Construct the HBVM(k,s) tableau; requires k >= s >= 1."""
    if s < 1:
        raise ValueError("stage count s must be at least 1")
    if k < s:
        raise ValueError(f"quadrature node count k={k} must satisfy k >= s={s}")
    c, b = gauss_legendre_rule(k)
    table = _legendre_table(s, c)             # degrees 0..s at the k nodes
    W_ext = table.T.copy()                    # k x (s+1)
    W = W_ext[:, :s].copy()
    I_mat = np.empty((k, s))
    I_mat[:, 0] = c
    for ell in range(1, s):
        I_mat[:, ell] = xi_coefficient(ell + 1) * table[ell + 1] - xi_coefficient(ell) * table[ell - 1]
    return HbvmTableau(
        s=s,
        k=k,
        c=c,
        b=b,
        W=W,
        W_ext=W_ext,
        I_mat=I_mat,
        X=_stage_matrix(s),
        X_hat=_stage_matrix_ext(s),
        xi=xi_coefficient(np.arange(1, s + 1, dtype=float)),
    )
