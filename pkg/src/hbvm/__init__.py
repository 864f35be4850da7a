"""Energy-conserving HBVM(k,s) integrators with low-rank stage solvers.

The stage equations of an HBVM(k,s) step form a matrix equation with a
low-rank right-hand side.  Linear problems take one Sylvester solve per
step; nonlinear problems use either a simplified Newton iteration or a
Newton-Krylov method preconditioned by the same matrix equation.
"""

from .errors import (
    HbvmError,
    NewtonDidNotConverge,
    NonFiniteResidual,
    NotConverged,
    SingularProjectedProblem,
    SolverFailure,
    StepSizeUnderflow,
    ValidationError,
)
from .tableau import (
    HbvmTableau,
    build_tableau,
    gauss_legendre_rule,
    shifted_legendre,
    shifted_legendre_integral,
    xi_coefficient,
)
from .matrix_equations import (
    KrylovStats,
    SylvesterProblem,
    krylov_sylvester_extended,
    krylov_sylvester_poly,
    lowrank_factor,
    solve_sylvester_dense,
)
from .newton_krylov import (
    FgmresOutcome,
    ForcingState,
    fd_jacobian_action,
    fgmres,
    update_forcing,
)
from .problems import (
    FrozenJacobian,
    HamiltonianProblem,
    WaveGrid,
    build_linear_from_matrix,
    build_linear_wave,
    build_semilinear_wave,
    hamiltonian_series,
)
from .integrator import (
    RunResult,
    StepController,
    StepStats,
    adapt_timestep,
    apply_preconditioner,
    eval_F,
    fixed_point_warmup,
    integrate,
    linear_step,
    newton_krylov_step,
    simplified_newton_step,
)
from .config import RunConfig, parse_config, sweep_cells
from .cli import run_experiment, run_sweep

__version__ = "0.1.0"
