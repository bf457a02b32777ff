"""Continuous-discrete nonlinear Gaussian filtering with series-expansion
sigma-point prediction, moment-ODE baselines, and a reproducible aircraft
tracking benchmark.
"""

from .basis import (
    BrownianBasis,
    FourierSineBasis,
    HaarBasis,
    IndexOutOfRange,
    LinearOptimalBasis,
    make_basis,
    make_linear_optimal_basis,
    reconstruct_path,
)
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .filters import (
    FilterConfig,
    FilterRunResult,
    ObservationSequence,
    SingularInnovation,
    default_moment_rule,
    default_se_rule,
    moment_ode_predict,
    run_filter,
    se_predict,
    update,
)
from .matrix import (
    EigenFailure,
    NotPositiveDefinite,
    cholesky_sqrt,
    symmetric_sqrt,
    validate_covariance,
)
from .models import (
    GaussianBelief,
    MeasurementModel,
    SdeModel,
    aircraft_model,
    ito_to_stratonovich,
    linear_model,
    radar_measurement,
    stratonovich_correction,
)
from .ode import (
    IvpProblem,
    MaxStepsExceeded,
    NonFiniteState,
    SolverConfig,
    solve_ivp,
)
from .randode import propagate_series
from .sigma import (
    DegenerateScaling,
    DimensionTooLarge,
    SigmaRule,
    SigmaSet,
    generate,
    transform_moments,
)
from .simulate import (
    MomentStudy,
    Trajectory,
    euler_maruyama,
    moment_study,
    sample_terminal_euler,
    sample_terminal_series,
    series_expansion_path,
    substream,
    synthesize_run,
)

__all__ = [
    "BrownianBasis",
    "ConfigError",
    "DegenerateScaling",
    "DimensionTooLarge",
    "EigenFailure",
    "ExperimentConfig",
    "FilterConfig",
    "FilterRunResult",
    "FourierSineBasis",
    "GaussianBelief",
    "HaarBasis",
    "IndexOutOfRange",
    "IvpProblem",
    "LinearOptimalBasis",
    "MaxStepsExceeded",
    "MeasurementModel",
    "MomentStudy",
    "NonFiniteState",
    "NotPositiveDefinite",
    "ObservationSequence",
    "SdeModel",
    "SigmaRule",
    "SigmaSet",
    "SingularInnovation",
    "SolverConfig",
    "Trajectory",
    "aircraft_model",
    "cholesky_sqrt",
    "default_config",
    "default_moment_rule",
    "default_se_rule",
    "euler_maruyama",
    "generate",
    "ito_to_stratonovich",
    "linear_model",
    "load_config",
    "make_basis",
    "make_linear_optimal_basis",
    "moment_ode_predict",
    "moment_study",
    "propagate_series",
    "radar_measurement",
    "reconstruct_path",
    "run_filter",
    "sample_terminal_euler",
    "sample_terminal_series",
    "se_predict",
    "series_expansion_path",
    "solve_ivp",
    "stratonovich_correction",
    "substream",
    "symmetric_sqrt",
    "synthesize_run",
    "transform_moments",
    "update",
    "validate_covariance",
]

__version__ = "0.1.0"
