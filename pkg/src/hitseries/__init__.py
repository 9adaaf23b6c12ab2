"""Boundary-hitting probabilities of Gaussian integrators via second quantization."""
from .chaos import (
    ChaosCoefficients,
    ChaosKernel,
    SpaceQuadrature,
    chaos_coefficients,
    duhamel_kernel,
    duhamel_kernels,
    fourier_wiener_check,
    pair_with,
    project_to_basis,
    symmetrize,
)
from .errors import (
    BetaOutOfRange,
    ConfigError,
    GridMismatch,
    HitSeriesError,
    LadderConditioningError,
    NonOrthonormalBasis,
    NotAContraction,
    OrderTooLarge,
    PecletViolation,
    QuadratureBlowUp,
    StartOutsideDomain,
)
from .grid import Grid, GridFunction, indicator, inner_product, make_uniform_grid, project_continuous
from .heat import SchemeParams, HeatField, solve_drifted, u0
from .hermite import hermite_at_zero, hermite_eval
from .hitting import DomainSpec, HitEstimate, mc_hit_probability, partial_bridge_oracle
from .integrator import IntegratorModel, PathEnsemble, covariance, sample_paths
from .operators import DenseOperator, FiniteRank, IntegralKernel, complement_from_R, defect_sqrt
from .quantization import (
    SeriesSettings,
    evaluate_at_zero,
    example1_expectation,
    gamma_1d,
    gamma_transform,
    hitting_probability_series,
)

__version__ = "0.1.0"
