"""Second-order penalty dynamics for constrained convex minimization.

Simulates ``x'' + gamma x' + grad phi(x) + beta(t) grad psi(x) = 0``, whose
trajectories approach the minimizers of ``phi`` over ``argmin psi``, and checks
the hypotheses and limit behaviour of the system numerically.
"""
from ._backend import DEFAULT_BACKEND, available as available_backends
from .convex import (INF, AffineSubspace, Ball, Box, ClosedConvexSet, ConjugateUnavailable,
                     DescriptorError, DimensionError, Halfspace, HuberHinge, LogSumExp,
                     PenaltyFunction, Quadratic, ShiftedSquaredNorm, SmoothConvexFunction,
                     SquaredDistance, WholeSpace, ZeroFunction, conjugate_eval, evaluate,
                     fd_gradient_check, function_from_dict, grad, penalty_from_dict, project,
                     self_check, set_from_dict, support)
from .diagnostics import (CertificationError, ConditionHReport, ConvergenceReport,
                          EnergySample, condition_h_check, convergence_report,
                          dissipation_residual, energy_series, lyapunov_inequality_check,
                          quasi_fejer_monitor)
from .dynamics import (GrowthConditionError, IntegrationError, IntegratorConfig,
                       ProblemInstance, State, Trajectory, heavy_ball, integrate,
                       rhs_first_order, rhs_second_order)
from .problems import (REGISTRY, BenchmarkProblem, certify, get_problem,
                       make_affine_constrained_quadratic, make_flat_objective_problem,
                       make_halfspace_problem, problem_from_dict)
from .schedules import (ConstSchedule, CustomSchedule, ExpSchedule, GrowthReport,
                        PenaltySchedule, PowerSchedule, beta_tilde, schedule_from_dict,
                        verify_growth)

__version__ = "0.1.0"
