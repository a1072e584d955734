"""Symplectic generating-function integrators and shooting solvers for optimal control."""

from .errors import (ConvergenceError, ModelError, RegularityError, SingularStepError, StepError, SympocpError,
                     VerificationError)
from .model import (ControlSystem, LQSpec, PhasePoint, PontryaginEvaluator, Trajectory, build_pontryagin,
                    lq_from_spec, lq_spec_from_dict)
from .elimination import (DirectHamiltonian, EliminationConfig, ReducedHamiltonian, eliminate, reduced_grad,
                          solve_stationarity)
from .integrators import (DiscreteLagrangian, Lagrangian, Method, MethodSpec, integrate, series_coefficients,
                          step_del, step_del_adaptive, step_gf2, step_series)
from .solvers import (DiscreteOCP, DiscreteTrajectory, ShootingConfig, augmented_index, brute_force_solve,
                      euler_discretization, necessary_step, objective, shoot_continuous, shoot_discrete)
from .dhs import LinearDHS, NonlinearDHS, dhs_regularity, quadratic_dhs, step_linear, step_nonlinear
from .catalog import CATALOG, Problem, get_problem, lq_problem
from .verify import (OrderReport, SymplecticityReport, composition_check, energy_drift, flow_jacobian,
                     hj_residual, observed_order, symplectic_defect)
from .io import emit_trajectory, load_problem_file

__version__ = "0.1.0"
