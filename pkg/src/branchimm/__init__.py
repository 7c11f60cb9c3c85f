"""Simulation and least squares variance estimation for critical branching
processes with time-dependent immigration."""

__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticParams,
    limit_covariance,
    mean_sequence,
    normalized_statistic,
    sigma_squared,
    theta_params,
    zeta_variance_crosscheck,
)
from .errors import (
    CappedModeError,
    DegenerateEstimatorError,
    ExperimentError,
    IndeterminateThetaError,
    PopulationOverflowError,
    QuadratureError,
    ValidationError,
)
from .estimate import (
    Estimate,
    ResidualSeries,
    clse_variance,
    clse_variance_homogeneous,
    decompose_error,
    residuals,
    variance_residuals,
)
from .models import (
    ImmigrationModel,
    OffspringModel,
    RegimeReport,
    ThetaClass,
    immigration_moments,
    offspring_moments,
    sample_immigration,
    sample_offspring_sum,
    validate_regime,
)
from .regvar import RegVarSeq
from .simulate import SimConfig, Trajectory, replication_stream, simulate
from .verify import (
    CheckTable,
    McSummary,
    fluctuation_check,
    lemma1_check,
    lindeberg_diagnostic,
    normality_experiment,
    variance_process_check,
)
