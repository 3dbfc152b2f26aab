"""Euler-type schemes for SDEs under a global monotonicity condition."""
from .experiment import (ErrorReport, ExperimentConfig, eoc, fit_order, projection_stats,
                         run_experiment, strong_error)
from .implicit import (ResolventQuery, SolveResult, StepSizeError, SolverError,
                       inverse_lipschitz_margin, local_expansion_margins,
                       resolvent_stability_margin, solve_resolvent, solve_resolvent_oracle)
from .model import (AssumptionSampleReport, Model, make_gbm, make_gle, make_model, make_svm32,
                    sample_assumption)
from .paths import BrownianPath, TimeGrid, coarsen, generate_path, generate_paths
from .reference import (ReferenceSpec, gbm_exact_at_T, gle_exact_at_T, numeric_reference_at_T)
from .schemes import (GridFunction, SchemeId, integrate, integrate_terminal, project, step_bem,
                      step_em, step_pem, step_ssbe)

__version__ = "0.1.0"
