"""Potential-constrained Gaussian belief recursion on discrete-time Ito processes."""

__version__ = "0.1.0"

from .control import ControlConfig, ScenarioResult, control_input, run_closed_loop, run_scenario
from .ekf import ObservationModel, ObservationStream, ekf_step, marginal_likelihood, run_filter
from .engine import (
    GaussianBelief,
    NormalizationDiagnostic,
    TrajectoryRecord,
    normalization,
    predict,
    sample_posterior,
    step,
    update,
    update_precision_form,
)
from .errors import (
    DomainViolation,
    MassLoss,
    NonFinite,
    NotPositiveDefinite,
    ParseError,
    QuadratureDomain,
    Singular,
    SqcError,
    ValidationError,
)
from .potential import (
    PotentialEvaluation,
    eval_double_well,
    eval_log_barrier,
    eval_quadratic_penalty,
    tanh_target,
    verify_derivatives,
)
from .process import ItoProcessModel, StatePath, make_drift, simulate_open_loop
from .scenario import Scenario, load_bundled, parse_scenario, scenario_from_dict, write_scenario

__all__ = [
    "__version__",
    "ControlConfig",
    "DomainViolation",
    "GaussianBelief",
    "ItoProcessModel",
    "MassLoss",
    "NonFinite",
    "NormalizationDiagnostic",
    "NotPositiveDefinite",
    "ObservationModel",
    "ObservationStream",
    "ParseError",
    "PotentialEvaluation",
    "QuadratureDomain",
    "Scenario",
    "ScenarioResult",
    "Singular",
    "SqcError",
    "StatePath",
    "TrajectoryRecord",
    "ValidationError",
    "control_input",
    "ekf_step",
    "eval_double_well",
    "eval_log_barrier",
    "eval_quadratic_penalty",
    "load_bundled",
    "make_drift",
    "marginal_likelihood",
    "normalization",
    "parse_scenario",
    "predict",
    "run_closed_loop",
    "run_filter",
    "run_scenario",
    "sample_posterior",
    "scenario_from_dict",
    "simulate_open_loop",
    "step",
    "tanh_target",
    "update",
    "update_precision_form",
    "verify_derivatives",
    "write_scenario",
]
