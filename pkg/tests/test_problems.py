import numpy as np
import pytest

from hbvm import (
    build_linear_from_matrix,
    build_linear_wave,
    build_semilinear_wave,
    hamiltonian_series,
)


def canonical_J(m):
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


def grad_H_fd(problem, y, step=1e-6):
    """Central finite-difference gradient of the energy (test oracle)."""
    g = np.zeros_like(y)
    for i in range(y.size):
        e = np.zeros_like(y)
        e[i] = step
        g[i] = (problem.hamiltonian(y + e) - problem.hamiltonian(y - e)) / (2 * step)
    return g


def dense_laplacian(problem):
    m = problem.dim // 2
    L = np.zeros((m, m))
    for j in range(m):
        e = np.zeros(problem.dim)
        e[j] = 1.0
        L[:, j] = problem.rhs(e)[m:]
    return L


class TestLinearWave:
    def test_rejects_small_grid(self):
        with pytest.raises(ValueError):
            build_linear_wave(2)

    def test_laplacian_row_sums(self):
        N = 16
        prob = build_linear_wave(N)
        L = dense_laplacian(prob)
        inv_dx2 = 1.0 / prob.grid.dx**2
        sums = L.sum(axis=1)
        assert sums[0] == pytest.approx(-inv_dx2, rel=1e-12)
        assert sums[-1] == pytest.approx(-inv_dx2, rel=1e-12)
        assert sums[1:-1] == pytest.approx(np.zeros(N - 3), abs=1e-9 * inv_dx2)

    def test_laplacian_spectrum_closed_form(self):
        N = 8
        prob = build_linear_wave(N)
        L = dense_laplacian(prob)
        eigs = np.sort(np.linalg.eigvalsh(L))
        j = np.arange(1, N)
        expected = np.sort(-(4.0 / prob.grid.dx**2) * np.sin(j * np.pi / (2 * N)) ** 2)
        assert np.abs(eigs - expected).max() <= 1e-10 * np.abs(expected).max()

    def test_laplacian_symmetric_negative_definite(self):
        for N in (8, 32, 64):
            prob = build_linear_wave(N)
            L = dense_laplacian(prob)
            assert np.abs(L - L.T).max() == 0.0
            assert np.linalg.eigvalsh(L).max() < 0.0

    def test_block_square(self):
        rng = np.random.default_rng(0)
        prob = build_linear_wave(12)
        m = prob.dim // 2
        y = rng.standard_normal(prob.dim)
        L = dense_laplacian(prob)
        yy = prob.apply_G(prob.apply_G(y))
        assert yy[:m] == pytest.approx(L @ y[:m], rel=1e-12, abs=1e-12)
        assert yy[m:] == pytest.approx(L @ y[m:], rel=1e-12, abs=1e-12)

    def test_solve_inverts_apply(self):
        rng = np.random.default_rng(1)
        for N in (8, 64, 256):
            prob = build_linear_wave(N)
            w = rng.standard_normal(prob.dim)
            assert np.abs(prob.solve_G(prob.apply_G(w)) - w).max() <= 1e-12 * np.abs(w).max()

    def test_frozen_jacobian_roundtrip(self):
        rng = np.random.default_rng(2)
        for N in (8, 64, 256):
            prob = build_linear_wave(N)
            frozen = prob.frozen_jacobian_at(prob.initial_state())
            w = rng.standard_normal(prob.dim)
            assert np.abs(frozen.solve(frozen.apply(w)) - w).max() <= 1e-12 * np.abs(w).max()

    def test_linearity_flag_honest(self):
        rng = np.random.default_rng(3)
        prob = build_linear_wave(16)
        assert prob.is_linear
        y1, y2 = rng.standard_normal((2, prob.dim))
        lhs = prob.rhs(2.0 * y1 - 0.5 * y2)
        rhs = 2.0 * prob.rhs(y1) - 0.5 * prob.rhs(y2)
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(rhs).max(), 1.0)

    def test_hamiltonian_gradient_consistency(self):
        rng = np.random.default_rng(4)
        prob = build_linear_wave(8)
        y = rng.standard_normal(prob.dim)
        expected = canonical_J(prob.dim // 2) @ grad_H_fd(prob, y)
        got = prob.rhs(y)
        assert np.abs(got - expected).max() <= 1e-5 * max(np.abs(expected).max(), 1.0)

    def test_rhs_cols_matches_rhs(self):
        rng = np.random.default_rng(5)
        prob = build_linear_wave(16)
        Y = rng.standard_normal((prob.dim, 4))
        block = prob.rhs_cols(Y)
        for j in range(4):
            assert block[:, j] == pytest.approx(prob.rhs(Y[:, j]), abs=1e-14)


class TestSemilinearWave:
    def test_rejects_small_grid(self):
        with pytest.raises(ValueError):
            build_semilinear_wave(2)

    def test_zero_displacement_reduces_to_linear(self):
        rng = np.random.default_rng(6)
        N = 16
        semi = build_semilinear_wave(N, L=1.0)
        lin = build_linear_wave(N, L=2.0)   # same dx = 2L/N
        assert semi.grid.dx == pytest.approx(lin.grid.dx)
        m = semi.dim // 2
        y = np.concatenate([np.zeros(m), rng.standard_normal(m)])
        assert semi.rhs(y) == pytest.approx(lin.rhs(y), abs=1e-14)
        w = rng.standard_normal(semi.dim)
        frozen = semi.frozen_jacobian_at(y)
        assert frozen.apply(w) == pytest.approx(lin.apply_G(w), abs=1e-12)

    def test_default_initial_data(self):
        prob = build_semilinear_wave(64)
        y0 = prob.initial_state()
        m = prob.dim // 2
        assert y0[:m] == pytest.approx(np.exp(-100.0 * prob.grid.x**2), abs=1e-15)
        assert np.all(y0[m:] == 0.0)

    def test_grid_spans_symmetric_domain(self):
        prob = build_semilinear_wave(10, L=1.0)
        assert prob.grid.dx == pytest.approx(0.2)
        assert prob.grid.x[0] == pytest.approx(-0.8)
        assert prob.grid.x[-1] == pytest.approx(0.8)
        assert len(prob.grid.x) == 9

    def test_frozen_jacobian_matches_fd_directional_derivative(self):
        rng = np.random.default_rng(7)
        prob = build_semilinear_wave(32)
        eps = 1e-7
        for _ in range(5):
            y = 0.5 * rng.standard_normal(prob.dim)
            w = rng.standard_normal(prob.dim)
            frozen = prob.frozen_jacobian_at(y)
            fd = (prob.rhs(y + eps * w) - prob.rhs(y)) / eps
            jac = frozen.apply(w)
            assert np.linalg.norm(fd - jac) <= 1e-6 * max(np.linalg.norm(jac), 1.0)

    def test_frozen_jacobian_roundtrip(self):
        rng = np.random.default_rng(8)
        for N in (8, 64, 256):
            prob = build_semilinear_wave(N)
            y = 0.3 * rng.standard_normal(prob.dim)
            frozen = prob.frozen_jacobian_at(y)
            w = rng.standard_normal(prob.dim)
            assert np.abs(frozen.solve(frozen.apply(w)) - w).max() <= 1e-12 * np.abs(w).max()

    def test_hamiltonian_gradient_consistency(self):
        # pins the sign convention: -f'(u) in the momentum equation,
        # +sum f(u_j) in the energy
        rng = np.random.default_rng(9)
        prob = build_semilinear_wave(8)
        y = 0.5 * rng.standard_normal(prob.dim)
        expected = canonical_J(prob.dim // 2) @ grad_H_fd(prob, y)
        got = prob.rhs(y)
        assert np.abs(got - expected).max() <= 1e-5 * max(np.abs(expected).max(), 1.0)

    def test_not_linear(self):
        assert not build_semilinear_wave(8).is_linear

    def test_custom_potential(self):
        prob = build_semilinear_wave(
            16,
            potential={"fprime": lambda u: u, "fsecond": lambda u: np.ones_like(u), "f": lambda u: 0.5 * u**2},
        )
        rng = np.random.default_rng(10)
        y = rng.standard_normal(prob.dim)
        m = prob.dim // 2
        lin = build_linear_wave(16, L=2.0)
        assert prob.rhs(y) == pytest.approx(lin.rhs(y) - np.concatenate([np.zeros(m), y[:m]]), abs=1e-12)


class TestLinearFromMatrix:
    def test_oscillator_energy_reconstruction(self):
        G = np.array([[0.0, 1.0], [-1.0, 0.0]])
        prob = build_linear_from_matrix(G)
        y = np.array([0.3, -0.4])
        assert prob.hamiltonian(y) == pytest.approx(0.5 * 0.25)
        assert prob.rhs(y) == pytest.approx(G @ y)
        assert prob.solve_G(G @ y) == pytest.approx(y, abs=1e-14)

    def test_rejects_odd_dimension(self):
        with pytest.raises(ValueError):
            build_linear_from_matrix(np.eye(3))


class TestHamiltonianSeries:
    def test_single_snapshot(self):
        prob = build_linear_wave(8)
        y0 = prob.initial_state()
        assert hamiltonian_series(prob, y0) == pytest.approx([prob.hamiltonian(y0)])

    def test_sine_mode_positive_energy(self):
        N = 8
        prob = build_linear_wave(N)
        m = prob.dim // 2
        u = np.sin(np.pi * prob.grid.x)
        y = np.concatenate([u, np.zeros(m)])
        L = dense_laplacian(prob)
        direct = -0.5 * u @ (L @ u)
        assert direct > 0.0
        assert hamiltonian_series(prob, y)[0] == pytest.approx(direct, rel=1e-12)

    def test_zero_state_zero_energy_semilinear(self):
        prob = build_semilinear_wave(8)
        assert hamiltonian_series(prob, np.zeros(prob.dim))[0] == 0.0

    def test_stacked_snapshots(self):
        rng = np.random.default_rng(11)
        prob = build_linear_wave(8)
        snaps = rng.standard_normal((5, prob.dim))
        values = hamiltonian_series(prob, snaps)
        assert values == pytest.approx([prob.hamiltonian(y) for y in snaps])
