"""Euler-Maruyama simulation of stochastic delay differential equations,
with a coupled-path strong convergence laboratory."""
from .brownian import BrownianPath, coarsen, ensemble, generate_increments, wiener_value
from .convergence import (ConvergenceReport, MomentEstimate, fit_rate,
                          increment_scaling, moment_estimate, strong_error)
from .errors import (CausalityError, ConfigurationError, NonFiniteStateError,
                     SDDEError)
from .euler import EulerPath, integrate, lookup_delayed
from .experiment import ExperimentConfig, emit_plot_data, run_experiment
from .model import (AffineHistory, DelaySpec, InitialSegment, SDDEProblem,
                    TestProblemParams, build_test_problem, evaluate_initial, kappa,
                    signed_pow, table1_params, validate_delays)
from .oracle import (OracleSolution, exact_segment_first, exact_segment_second,
                     exact_solution, fundamental_factor, method_of_steps_ode)

__version__ = "0.1.0"
