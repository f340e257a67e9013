"""Sparse calibration of scalar diffusion models.

Simulate discretely observed ergodic diffusions, estimate drift and
diffusion parameters by a Euler quasi-likelihood contrast, and select the
relevant parameters by an adaptive LASSO whose zeros are exact. Ships a
small family of interest-rate models, a seeded Monte Carlo harness with
density summaries, and a CSV/JSON command line.
"""

from .alasso import (
    PenaltyWeights,
    SelectionResult,
    kkt_check,
    make_weights,
    penalized_objective,
    select,
    solve_penalized,
)
from .contrast import (
    ContrastEval,
    RateMatrix,
    evaluate_contrast,
    quasi_grad,
    quasi_hess,
    quasi_loglik,
    repair_hessian,
    scaled_hess,
)
from .dataio import DataSource, load_csv, write_trajectory
from .errors import (
    AllFailedError,
    DegenerateSampleError,
    DomainError,
    GridError,
    InvalidReductionError,
    NonFiniteError,
    NotPositiveDefiniteError,
    ParseError,
    SdeLassoError,
)
from .models import (
    ModelSpec,
    ParamVector,
    ckls_reduce,
    get_model,
    model_names,
)
from .montecarlo import McConfig, McResult, McSummary, kde, run_mc, summarize
from .qmle import FitOptions, FitResult, default_init, fit
from .simulate import SimConfig, Trajectory, simulate, simulate_ensemble

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AllFailedError",
    "ContrastEval",
    "DataSource",
    "DegenerateSampleError",
    "DomainError",
    "FitOptions",
    "FitResult",
    "GridError",
    "InvalidReductionError",
    "McConfig",
    "McResult",
    "McSummary",
    "ModelSpec",
    "NonFiniteError",
    "NotPositiveDefiniteError",
    "ParamVector",
    "ParseError",
    "PenaltyWeights",
    "RateMatrix",
    "SdeLassoError",
    "SelectionResult",
    "SimConfig",
    "Trajectory",
    "ckls_reduce",
    "default_init",
    "evaluate_contrast",
    "fit",
    "get_model",
    "kde",
    "kkt_check",
    "load_csv",
    "make_weights",
    "model_names",
    "penalized_objective",
    "quasi_grad",
    "quasi_hess",
    "quasi_loglik",
    "repair_hessian",
    "run_mc",
    "scaled_hess",
    "select",
    "simulate",
    "simulate_ensemble",
    "solve_penalized",
    "summarize",
    "write_trajectory",
]
