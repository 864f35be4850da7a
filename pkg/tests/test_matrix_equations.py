import numpy as np
import pytest
import scipy.linalg

from hbvm import (
    NotConverged,
    SingularProjectedProblem,
    SylvesterProblem,
    krylov_sylvester_extended,
    krylov_sylvester_poly,
    lowrank_factor,
    solve_sylvester_dense,
)


def kron_oracle(Z, R, C):
    """Brute-force Kronecker solve of Z E + E R = C (independent route)."""
    p, q = C.shape
    K = np.kron(np.eye(q), Z) + np.kron(R.T, np.eye(p))
    return np.linalg.solve(K, C.flatten(order="F")).reshape((p, q), order="F")


def random_problem(rng, dim, s, r=1, spd=False, with_inverse=True):
    """Random Sylvester problem with provably disjoint spectra.

    Z has spectrum near 1 (or SPD in [1, 2]); ||R|| <= 0.3 keeps the
    spectrum of -R inside a disk that cannot touch Z's.
    """
    if spd:
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        Z = Q @ np.diag(rng.uniform(1.0, 2.0, dim)) @ Q.T
    else:
        Z = np.eye(dim) + 0.3 * rng.standard_normal((dim, dim))
    R = rng.standard_normal((s, s))
    R *= 0.3 / max(np.linalg.norm(R, 2), 1e-30)
    U = rng.standard_normal((dim, r))
    V = rng.standard_normal((s, r))
    return SylvesterProblem(
        apply_Z=lambda w: Z @ w,
        apply_Z_inverse=(lambda w: np.linalg.solve(Z, w)) if with_inverse else None,
        R=R,
        U=U,
        V=V,
        dim=dim,
        small_dim=s,
    ), Z, R, U, V


class TestDenseSolve:
    def test_scalar(self):
        Y = solve_sylvester_dense(np.array([[2.0]]), np.array([[3.0]]), np.array([[10.0]]))
        assert Y == pytest.approx(np.array([[2.0]]))

    def test_identity_against_zero(self):
        rng = np.random.default_rng(1)
        C = rng.standard_normal((5, 3))
        Y = solve_sylvester_dense(np.eye(5), np.zeros((3, 3)), C)
        assert Y == pytest.approx(C, abs=1e-14)

    def test_matches_bartels_stewart(self):
        # dual route: our Kronecker path vs scipy's Schur-based solver
        rng = np.random.default_rng(2)
        for _ in range(10):
            H = np.eye(3) + 0.4 * rng.standard_normal((3, 3))
            R = 0.3 * rng.standard_normal((2, 2))
            C = np.outer(rng.standard_normal(3), rng.standard_normal(2))
            Y = solve_sylvester_dense(H, R, C)
            Y_ref = scipy.linalg.solve_sylvester(H, R, C)
            assert np.abs(Y - Y_ref).max() <= 1e-12 * max(1.0, np.abs(Y_ref).max())

    def test_residual_contract(self):
        rng = np.random.default_rng(3)
        H = np.eye(6) + 0.2 * rng.standard_normal((6, 6))
        R = 0.2 * rng.standard_normal((4, 4))
        C = rng.standard_normal((6, 4))
        Y = solve_sylvester_dense(H, R, C)
        res = np.linalg.norm(H @ Y + Y @ R - C)
        bound = 1e-12 * (
            np.linalg.norm(H) * np.linalg.norm(Y)
            + np.linalg.norm(Y) * np.linalg.norm(R)
            + np.linalg.norm(C)
        )
        assert res <= bound

    def test_singular_spectra_overlap(self):
        # spec(H) = {1} meets spec(-R) = {1}: the Kronecker system is singular
        with pytest.raises(SingularProjectedProblem):
            solve_sylvester_dense(np.array([[1.0]]), np.array([[-1.0]]), np.array([[1.0]]))


class TestPolynomialKrylov:
    def test_invariant_direction_converges_immediately(self):
        dim = 20
        alpha, beta = 2.0, 3.0
        u = np.random.default_rng(4).standard_normal(dim)
        v = np.array([1.0])
        prob = SylvesterProblem(
            apply_Z=lambda w: alpha * w,
            R=np.array([[beta]]),
            U=u[:, None],
            V=v[:, None],
            dim=dim,
            small_dim=1,
        )
        E, stats = krylov_sylvester_poly(prob, 1e-12)
        assert stats.iterations == 1
        assert E == pytest.approx(np.outer(u, v) / (alpha + beta), abs=1e-13)

    def test_matches_dense_oracle_at_full_dimension(self):
        rng = np.random.default_rng(5)
        for dim, s in [(6, 2), (12, 4), (9, 3)]:
            prob, Z, R, U, V = random_problem(rng, dim, s)
            E, stats = krylov_sylvester_poly(prob, 1e-14, max_it=dim + 5)
            E_ref = kron_oracle(Z, R, U @ V.T)
            scale = max(1.0, np.abs(E_ref).max())
            assert np.abs(E - E_ref).max() <= 1e-10 * scale

    def test_reported_rho_is_true_residual(self):
        rng = np.random.default_rng(6)
        prob, Z, R, U, V = random_problem(rng, 40, 3)
        E, stats = krylov_sylvester_poly(prob, 1e-8)
        rho = stats.residual_history[-1]
        true = prob.residual(E)
        assert true == pytest.approx(rho, rel=1e-10, abs=1e-13)

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(7)
        prob, *_ = random_problem(rng, 30, 2)
        _, stats = krylov_sylvester_poly(prob, 1e-10)
        gram = stats.basis.T @ stats.basis
        assert np.abs(gram - np.eye(stats.basis_size)).max() <= 1e-10

    def test_zero_rhs(self):
        prob = SylvesterProblem(
            apply_Z=lambda w: w, R=np.zeros((2, 2)),
            U=np.zeros((8, 1)), V=np.zeros((2, 1)), dim=8, small_dim=2,
        )
        E, stats = krylov_sylvester_poly(prob, 1e-12)
        assert np.all(E == 0.0) and stats.converged

    def test_rejects_block_rhs(self):
        rng = np.random.default_rng(8)
        prob, *_ = random_problem(rng, 10, 3, r=2)
        with pytest.raises(ValueError):
            krylov_sylvester_poly(prob, 1e-10)

    def test_not_converged_carries_iterate(self):
        # a hard problem with a tiny iteration cap must raise with payload
        rng = np.random.default_rng(9)
        prob, *_ = random_problem(rng, 60, 3)
        with pytest.raises(NotConverged) as info:
            krylov_sylvester_poly(prob, 1e-14, max_it=2)
        assert info.value.result is not None
        assert info.value.stats.iterations == 2


class TestExtendedKrylov:
    def test_requires_inverse_action(self):
        rng = np.random.default_rng(10)
        prob, *_ = random_problem(rng, 10, 2, with_inverse=False)
        with pytest.raises(ValueError):
            krylov_sylvester_extended(prob, 1e-10)

    def test_spd_matches_dense_oracle(self):
        rng = np.random.default_rng(11)
        for dim, s in [(8, 2), (12, 2), (10, 4)]:
            prob, Z, R, U, V = random_problem(rng, dim, s, spd=True)
            E, stats = krylov_sylvester_extended(prob, 1e-13, max_it=dim)
            E_ref = kron_oracle(Z, R, U @ V.T)
            assert np.abs(E - E_ref).max() <= 1e-10 * max(1.0, np.abs(E_ref).max())

    def test_block_rhs_matches_dense_oracle(self):
        rng = np.random.default_rng(12)
        prob, Z, R, U, V = random_problem(rng, 12, 4, r=3)
        E, _ = krylov_sylvester_extended(prob, 1e-13, max_it=12)
        E_ref = kron_oracle(Z, R, U @ V.T)
        assert np.abs(E - E_ref).max() <= 1e-10 * max(1.0, np.abs(E_ref).max())

    def test_wide_spectrum_beats_polynomial(self):
        # condition number 1e6: inverse directions capture the small end
        rng = np.random.default_rng(13)
        dim = 400
        diag = np.logspace(0, 6, dim)
        R = np.array([[0.5, -0.1], [0.1, 0.2]])
        u = rng.standard_normal(dim)
        v = rng.standard_normal(2)
        kwargs = dict(R=R, U=u[:, None], V=v[:, None], dim=dim, small_dim=2)
        prob_ext = SylvesterProblem(
            apply_Z=lambda w: (diag * w.T).T, apply_Z_inverse=lambda w: (w.T / diag).T, **kwargs
        )
        E_ext, st_ext = krylov_sylvester_extended(prob_ext, 1e-10, max_it=200)
        prob_poly = SylvesterProblem(apply_Z=lambda w: (diag * w.T).T, **kwargs)
        try:
            _, st_poly = krylov_sylvester_poly(prob_poly, 1e-10, max_it=399)
            poly_iters = st_poly.iterations
        except NotConverged as exc:
            poly_iters = exc.stats.iterations
        assert st_ext.iterations <= poly_iters / 2

    def test_true_residual_close_to_estimate(self):
        rng = np.random.default_rng(14)
        prob, *_ = random_problem(rng, 50, 3, r=2)
        E, stats = krylov_sylvester_extended(prob, 1e-10)
        assert prob.residual(E) <= 1.1 * stats.residual_history[-1] + 1e-12 * prob.rhs_scale()

    def test_breakdown_on_invariant_subspace_is_sound(self):
        # u lives in a 3-dimensional invariant subspace of Z; with an
        # unreachable tolerance the candidates must deflate to nothing
        rng = np.random.default_rng(40)
        dim = 12
        block = rng.standard_normal((3, 3))
        block = block @ block.T + 3.0 * np.eye(3)
        Z = np.diag(np.arange(1.0, dim + 1.0))
        Z[:3, :3] = block
        u = np.zeros(dim)
        u[:3] = [1.0, 2.0, 3.0]
        prob = SylvesterProblem(
            apply_Z=lambda w: Z @ w,
            apply_Z_inverse=lambda w: np.linalg.solve(Z, w),
            R=np.array([[0.25]]),
            U=u[:, None],
            V=np.array([[2.0]]),
            dim=dim,
            small_dim=1,
        )
        E, stats = krylov_sylvester_extended(prob, 1e-30, max_it=50)
        assert stats.breakdown
        assert stats.basis_size == 3
        assert prob.residual(E) <= 1e-10 * prob.rhs_scale()

    def test_stopping_scale_honors_contract(self):
        rng = np.random.default_rng(15)
        prob, *_ = random_problem(rng, 40, 3, r=2)
        tol = 1e-9
        E, stats = krylov_sylvester_extended(prob, tol)
        assert stats.converged
        assert stats.residual_history[-1] <= tol * prob.rhs_scale()

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(16)
        prob, *_ = random_problem(rng, 35, 3, r=2)
        _, stats = krylov_sylvester_extended(prob, 1e-11)
        gram = stats.basis.T @ stats.basis
        assert np.abs(gram - np.eye(stats.basis_size)).max() <= 1e-10


class TestOracleEquivalenceSweep:
    def test_both_solvers_match_dense(self):
        rng = np.random.default_rng(17)
        for trial in range(50):
            dim = int(rng.integers(4, 13))
            s = int(rng.integers(1, 5))
            prob, Z, R, U, V = random_problem(rng, dim, s)
            E_ref = kron_oracle(Z, R, U @ V.T)
            scale = max(1.0, np.linalg.norm(E_ref))
            E_p, _ = krylov_sylvester_poly(prob, 1e-12, max_it=dim + 10)
            E_e, _ = krylov_sylvester_extended(prob, 1e-12, max_it=dim + 10)
            assert np.linalg.norm(E_p - E_ref) / scale <= 1e-8
            assert np.linalg.norm(E_e - E_ref) / scale <= 1e-8


class TestLowRankFactor:
    def test_zero_matrix(self):
        F1, F2, r = lowrank_factor(np.zeros((30, 4)), 1e-12)
        assert r == 0 and F1.shape == (30, 0) and F2.shape == (4, 0)

    def test_outer_product(self):
        rng = np.random.default_rng(18)
        a, b = rng.standard_normal(50), rng.standard_normal(3)
        M = np.outer(a, b)
        F1, F2, r = lowrank_factor(M, 1e-12)
        assert r == 1
        assert np.abs(F1 @ F2.T - M).max() <= 1e-14 * np.abs(M).max()

    def test_generic_full_rank(self):
        rng = np.random.default_rng(19)
        M = rng.standard_normal((200, 4))
        F1, F2, r = lowrank_factor(M, 1e-12)
        assert r == 4
        assert np.linalg.norm(M - F1 @ F2.T) <= 1e-12 * np.linalg.norm(M)

    def test_truncates_to_numerical_rank(self):
        rng = np.random.default_rng(20)
        base = rng.standard_normal((100, 2)) @ rng.standard_normal((2, 5))
        noise = 1e-14 * rng.standard_normal((100, 5))
        F1, F2, r = lowrank_factor(base + noise, 1e-10)
        assert r == 2

    def test_reconstruction_tolerance_random(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            M = rng.standard_normal((40, 6))
            for rel_tol in (1e-6, 1e-10, 1e-14):
                F1, F2, r = lowrank_factor(M, rel_tol)
                assert np.linalg.norm(M - F1 @ F2.T) <= rel_tol * np.linalg.norm(M) + 1e-15
