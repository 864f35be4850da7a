"""HBVM(k,s) time steppers and the outer integration loop.

One step advances y by h * phi_0 where the stage matrix Phi (2m x s)
solves the stage equations.  Linear problems need a single Sylvester
matrix-equation solve; nonlinear problems go through either a simplified
Newton iteration (frozen Jacobian, one matrix equation per iteration) or
a full Newton-Krylov method whose FGMRES inner solver is preconditioned
by the same frozen-Jacobian matrix equation.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NewtonDidNotConverge,
    NonFiniteResidual,
    NotConverged,
    SolverFailure,
    StepSizeUnderflow,
)
from .matrix_equations import (
    SylvesterProblem,
    krylov_sylvester_extended,
    krylov_sylvester_poly,
    lowrank_factor,
)
from .newton_krylov import ForcingState, fd_jacobian_action, fgmres, update_forcing

_SOLVERS = {"poly": krylov_sylvester_poly, "extended": krylov_sylvester_extended}


@dataclass
class StepStats:
    """Per-step diagnostics; exactly what the CSV emission consumes."""

    time: float
    h_used: float
    newton_iters: int = 0
    fgmres_iters_per_newton: list = field(default_factory=list)
    warmup_iters: int = 0
    warmup_halvings: int = 0
    residual_final: float = 0.0
    energy: float = float("nan")
    matrix_eq_iters: list = field(default_factory=list)
    halvings_this_step: int = 0
    # per-Newton FGMRES targets and achieved residuals (drives the
    # residual-scatter figure)
    eta_per_newton: list = field(default_factory=list)
    fgmres_residual_per_newton: list = field(default_factory=list)


@dataclass
class StepController:
    """Convergence-driven step control: halve on failure, double after streaks."""

    h: float
    h_min: float
    h_max: float
    consecutive_successes: int = 0
    halvings_this_step: int = 0

    def __post_init__(self):
        if not (0.0 < self.h_min <= self.h <= self.h_max):
            raise ValueError("need 0 < h_min <= h <= h_max")


def adapt_timestep(ctrl, step_succeeded):
    """Update the controller after a step attempt.

    Failure halves h (raising StepSizeUnderflow at the floor) and resets
    the success streak; more than 4 consecutive successes double h up to
    the cap and reset the counter, so a doubling can never follow a
    halving by fewer than 5 accepted steps.
    """
    if step_succeeded:
        ctrl.consecutive_successes += 1
        if ctrl.consecutive_successes > 4:
            ctrl.h = min(2.0 * ctrl.h, ctrl.h_max)
            ctrl.consecutive_successes = 0
    else:
        if ctrl.h <= ctrl.h_min * (1.0 + 1e-12):
            raise StepSizeUnderflow(
                f"step failed at the configured floor h_min={ctrl.h_min:.3e}"
            )
        ctrl.h = max(0.5 * ctrl.h, ctrl.h_min)
        ctrl.consecutive_successes = 0
        ctrl.halvings_this_step += 1
    return ctrl


def eval_F(problem, tableau, y_n, h, Phi):
    """Stage residual F(Phi) = Phi - [f at the stage points] B W.

    The i-th stage point is y_n + h * Phi I^T e_i; exactly k evaluations
    of f per call.  Non-finite values from f raise NonFiniteResidual.
    """
    stage_points = y_n[:, None] + h * (Phi @ tableau.I_mat.T)
    f_vals = problem.rhs_cols(stage_points)
    if not np.isfinite(f_vals).all():
        raise NonFiniteResidual("right-hand side returned NaN/Inf at a stage point")
    return Phi - (f_vals * tableau.b[None, :]) @ tableau.W


def _solve_frozen_stage_equation(jac_solve, jac_apply, h, tableau, F1, F2, solver, tol, max_it):
    """Solve E - h J E X^T = F1 F2^T through its Sylvester form.

    Multiplying by (1/h) J^{-1} gives Z E + E R = U V^T with
    Z = (1/h) J^{-1}, R = -X^T and U = (1/h) J^{-1} F1, so the Krylov
    solution is the stage increment itself (no sign flip); Z^{-1} is h J,
    one Jacobian action per application.
    """
    dim = F1.shape[0]
    prob = SylvesterProblem(
        apply_Z=lambda w: jac_solve(w) / h,
        apply_Z_inverse=lambda w: h * jac_apply(w),
        R=-tableau.X.T,
        U=jac_solve(F1) / h,
        V=F2,
        dim=dim,
        small_dim=tableau.s,
    )
    return _SOLVERS[solver](prob, tol, max_it)


def linear_step(problem, tableau, y_n, h, solver="extended", tol=1e-10, max_it=100):
    """One HBVM step for f(y) = G y via a single matrix-equation solve.

    The stage equation Phi - h G Phi X^T = (G y_n)(W^T b)^T is solved in
    Sylvester form; with the convention used here the Sylvester unknown
    equals Phi directly and U = y_n / h (exactly, since G^{-1} G y_n =
    y_n).  The update is y_{n+1} = y_n + h phi_0.
    """
    if not problem.is_linear:
        raise ValueError("linear_step requires a linear problem")
    f2 = tableau.weighted_basis()
    prob = SylvesterProblem(
        apply_Z=lambda w: problem.solve_G(w) / h,
        apply_Z_inverse=lambda w: h * problem.apply_G(w),
        R=-tableau.X.T,
        U=(y_n / h)[:, None],
        V=f2[:, None],
        dim=problem.dim,
        small_dim=tableau.s,
    )
    try:
        Phi, kstats = _SOLVERS[solver](prob, tol, max_it)
    except NotConverged as exc:
        raise SolverFailure(f"linear stage equation did not converge: {exc}") from exc
    y_next = y_n + h * Phi[:, 0]
    stats = StepStats(
        time=float("nan"),
        h_used=h,
        residual_final=kstats.residual_history[-1] if kstats.residual_history else 0.0,
        matrix_eq_iters=[kstats.iterations],
        energy=problem.hamiltonian(y_next),
    )
    return y_next, stats


def fixed_point_warmup(problem, tableau, y_n, h, tol=1e-2, max_iters=20):
    """Fixed-point pre-iteration producing the Newton initial guess.

    Iterates Phi <- [f at stage points] B W from Phi = 0 with an internal
    step h_bar that starts at h; whenever the update norm grows the last
    iterate is discarded and h_bar is halved.  Stops when the update norm
    falls below 1e-2 or after 20 sweeps; Newton then runs at the original
    h regardless of any internal halving.
    """
    h_bar = h
    Phi = np.zeros((problem.dim, tableau.s))
    delta_prev = np.inf
    iters = 0
    halvings = 0
    while iters < max_iters:
        Phi_new = Phi - eval_F(problem, tableau, y_n, h_bar, Phi)
        iters += 1
        delta = np.linalg.norm(Phi_new - Phi)
        if delta > delta_prev:
            h_bar *= 0.5
            halvings += 1
            continue  # step back: keep the previous iterate
        Phi = Phi_new
        delta_prev = delta
        if delta < tol:
            break
    return Phi, iters, halvings


def _stop_tolerance(f_nrm0, tol_abs, tol_rel):
    return tol_abs + tol_rel * f_nrm0


def simplified_newton_step(
    problem,
    tableau,
    y_n,
    h,
    tol_abs=1e-8,
    tol_rel=1e-10,
    max_newton=100,
    solver="extended",
    max_it=100,
    warmup=True,
):
    """Simplified Newton: all stage Jacobians frozen at y_n.

    Each iteration factors F(Phi) = F1 F2^T and solves one frozen-Jacobian
    matrix equation for the increment, so the Kronecker structure of the
    linear case is retained.  Converges when the normalized residual
    drops below stop_tol = tol_abs + tol_rel * (initial residual).
    """
    if warmup:
        Phi, w_iters, w_halv = fixed_point_warmup(problem, tableau, y_n, h)
    else:
        Phi, w_iters, w_halv = np.zeros((problem.dim, tableau.s)), 0, 0
    frozen = problem.frozen_jacobian_at(y_n)
    n = problem.dim * tableau.s
    stats = StepStats(time=float("nan"), h_used=h, warmup_iters=w_iters, warmup_halvings=w_halv)
    stop_tol = None
    f_nrm = np.inf
    for p in range(max_newton + 1):
        F_mat = eval_F(problem, tableau, y_n, h, Phi)
        f_nrm = np.linalg.norm(F_mat) / np.sqrt(n)
        if stop_tol is None:
            stop_tol = _stop_tolerance(f_nrm, tol_abs, tol_rel)
        if f_nrm < stop_tol:
            stats.newton_iters = p
            stats.residual_final = f_nrm
            y_next = y_n + h * Phi[:, 0]
            stats.energy = problem.hamiltonian(y_next)
            return y_next, stats
        if p == max_newton:
            break
        F1, F2, rank = lowrank_factor(F_mat, 1e-12)
        if rank == 0:
            continue  # residual is exactly zero; the test above will catch it
        inner_tol = min(1e-10, 0.01 * f_nrm)
        try:
            Delta, kstats = _solve_frozen_stage_equation(
                frozen.solve, frozen.apply, h, tableau, F1, F2, solver, inner_tol, max_it
            )
        except NotConverged as exc:
            raise SolverFailure(f"simplified-Newton matrix equation failed: {exc}") from exc
        stats.matrix_eq_iters.append(kstats.iterations)
        Phi = Phi - Delta
    raise NewtonDidNotConverge(
        f"simplified Newton: residual {f_nrm:.3e} above stop_tol {stop_tol:.3e} "
        f"after {max_newton} iterations",
        iterations=max_newton,
        residual=f_nrm,
    )


def apply_preconditioner(frozen, tableau, h, residual_vec, inner_tol, solver="extended", max_it=100):
    """Frozen-Jacobian matrix-equation preconditioner for the Newton system.

    Reshapes the FGMRES vector to 2m x s, factors it, and solves
    W - h J_f W X^T = R1 R2^T; every application therefore costs one
    simplified-Newton linear solve.  A failed application is a hard
    error: silently falling back to the identity would poison FGMRES.
    """
    dim = residual_vec.size // tableau.s
    R_mat = residual_vec.reshape((dim, tableau.s), order="F")
    R1, R2, rank = lowrank_factor(R_mat, 1e-12)
    if rank == 0:
        return np.zeros_like(residual_vec), 0
    try:
        W, kstats = _solve_frozen_stage_equation(
            frozen.solve, frozen.apply, h, tableau, R1, R2, solver, inner_tol, max_it
        )
    except NotConverged as exc:
        raise SolverFailure(f"preconditioner matrix equation failed: {exc}") from exc
    return W.flatten(order="F"), kstats.iterations


def newton_krylov_step(
    problem,
    tableau,
    y_n,
    h,
    tol_abs=1e-8,
    tol_rel=1e-10,
    max_newton=100,
    gamma=0.9,
    eta_max=0.9,
    solver="extended",
    fgmres_max=50,
    max_it=100,
    warmup=True,
):
    """Full Newton-Krylov step with FD Jacobian actions and FGMRES.

    The Jacobian of the stage residual is applied only through finite
    differences; FGMRES runs with the frozen-Jacobian matrix-equation
    preconditioner and per-iteration forcing terms from the adaptive
    controller.  Converges when the normalized residual drops below
    stop_tol = tol_abs + tol_rel * (initial residual).
    """
    if warmup:
        Phi, w_iters, w_halv = fixed_point_warmup(problem, tableau, y_n, h)
    else:
        Phi, w_iters, w_halv = np.zeros((problem.dim, tableau.s)), 0, 0
    frozen = problem.frozen_jacobian_at(y_n)
    dim, s = problem.dim, tableau.s
    n = dim * s
    stats = StepStats(time=float("nan"), h_used=h, warmup_iters=w_iters, warmup_halvings=w_halv)

    def F_eval(P):
        return eval_F(problem, tableau, y_n, h, P)

    forcing = None
    f_nrm_prev = None
    f_nrm = np.inf
    for p in range(max_newton + 1):
        F_mat = F_eval(Phi)
        f_nrm = np.linalg.norm(F_mat) / np.sqrt(n)
        if forcing is None:
            stop_tol = _stop_tolerance(f_nrm, tol_abs, tol_rel)
            forcing = ForcingState(eta=eta_max, eta_max=eta_max, gamma=gamma, stop_tol=stop_tol)
            eta = eta_max
        else:
            eta = update_forcing(forcing, f_nrm, f_nrm_prev)
        if f_nrm < forcing.stop_tol:
            stats.newton_iters = p
            stats.residual_final = f_nrm
            y_next = y_n + h * Phi[:, 0]
            stats.energy = problem.hamiltonian(y_next)
            return y_next, stats
        if p == max_newton:
            break
        f_nrm_prev = f_nrm

        inner_tol = min(1e-10, 0.01 * eta)
        precond_iters = []

        def apply_A(w):
            W_dir = w.reshape((dim, s), order="F")
            return fd_jacobian_action(F_eval, Phi, F_mat, W_dir).flatten(order="F")

        def apply_M(w):
            z, iters = apply_preconditioner(frozen, tableau, h, w, inner_tol, solver, max_it)
            precond_iters.append(iters)
            return z

        outcome = fgmres(apply_A, apply_M, F_mat.flatten(order="F"), eta, fgmres_max)
        stats.fgmres_iters_per_newton.append(outcome.iterations)
        stats.matrix_eq_iters.extend(precond_iters)
        stats.eta_per_newton.append(eta)
        stats.fgmres_residual_per_newton.append(outcome.residual)
        Phi = Phi - outcome.solution.reshape((dim, s), order="F")
    raise NewtonDidNotConverge(
        f"Newton-Krylov: residual {f_nrm:.3e} above stop_tol {forcing.stop_tol:.3e} "
        f"after {max_newton} iterations",
        iterations=max_newton,
        residual=f_nrm,
    )


@dataclass
class RunResult:
    """Outcome of an integration: final state plus per-step diagnostics."""

    t: float
    y: np.ndarray
    steps: list
    snapshots: list                 # (t, state) pairs at the configured stride
    wall_times: list                # seconds per accepted step (non-deterministic)

    @property
    def energies(self):
        return np.array([s.energy for s in self.steps])

    def energy_drift(self, h0_energy):
        if h0_energy != 0.0:
            return np.max(np.abs(self.energies - h0_energy)) / abs(h0_energy)
        return np.max(np.abs(self.energies))


def integrate(
    problem,
    tableau,
    y0,
    T,
    h0,
    stepper="linear",
    matrix_solver="extended",
    matrix_tol=1e-10,
    newton_abs=1e-8,
    newton_rel=1e-10,
    max_newton=100,
    gamma=0.9,
    eta_max=0.9,
    h_min=None,
    h_max=None,
    snapshot_stride=0,
    max_matrix_it=100,
):
    """Advance y' = f(y) from 0 to T with the selected HBVM stepper.

    The controller halves h when a step fails to converge and doubles it
    after more than four consecutive successes; the final step is clamped
    so the accepted steps sum to exactly T.  Energy is recorded on every
    step, full state snapshots only at ``snapshot_stride``.
    """
    if T <= 0.0 or h0 <= 0.0:
        raise ValueError("need T > 0 and h0 > 0")
    h_min = h_min if h_min is not None else h0 / 2.0**20
    h_max = h_max if h_max is not None else h0
    ctrl = StepController(h=min(max(h0, h_min), h_max), h_min=h_min, h_max=h_max)

    def one_step(y, h):
        if stepper == "linear":
            return linear_step(problem, tableau, y, h, matrix_solver, matrix_tol, max_matrix_it)
        if stepper == "simplified-newton":
            return simplified_newton_step(
                problem, tableau, y, h, newton_abs, newton_rel, max_newton,
                matrix_solver, max_matrix_it,
            )
        if stepper == "newton-krylov":
            return newton_krylov_step(
                problem, tableau, y, h, newton_abs, newton_rel, max_newton,
                gamma, eta_max, matrix_solver, max_it=max_matrix_it,
            )
        raise ValueError(f"unknown stepper {stepper!r}")

    t = 0.0
    t_comp = 0.0
    y = np.array(y0, dtype=float)
    comp = np.zeros_like(y)   # compensated summation keeps the update
    steps = []                # roundoff from random-walking over many steps
    snapshots = []
    wall_times = []
    if snapshot_stride > 0:
        snapshots.append((0.0, y.copy()))
    step_index = 0
    while T - t > 1e-12 * max(1.0, T):
        ctrl.halvings_this_step = 0
        tic = time.perf_counter()
        while True:
            h_att = min(ctrl.h, T - t)
            try:
                y_next, sstats = one_step(y, h_att)
                break
            except (NewtonDidNotConverge, SolverFailure):
                ctrl.h = h_att  # halve from the attempted (possibly clamped) value
                adapt_timestep(ctrl, False)
        wall_times.append(time.perf_counter() - tic)
        t_incr = h_att - t_comp
        t_new = t + t_incr
        t_comp = (t_new - t) - t_incr
        t = t_new
        incr = (y_next - y) - comp
        y_next = y + incr
        comp = (y_next - y) - incr
        y = y_next
        sstats.time = t
        sstats.halvings_this_step = ctrl.halvings_this_step
        steps.append(sstats)
        step_index += 1
        adapt_timestep(ctrl, True)
        if snapshot_stride > 0 and step_index % snapshot_stride == 0:
            snapshots.append((t, y.copy()))
    return RunResult(t=t, y=y, steps=steps, snapshots=snapshots, wall_times=wall_times)
