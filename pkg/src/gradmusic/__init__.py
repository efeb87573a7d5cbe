"""Spectral estimation by gradient descent on the subspace landscape.

The package recovers frequencies and amplitudes of a sparse exponential sum
from noisy equispaced samples: a Toeplitz lifting supplies a singular
subspace, a coarse grid seeds one gradient descent per frequency on the
landscape q(t) = 1 - ||W* phi(t)||^2, and a quadratic form reads off the
amplitudes.  A classical full-grid search, noise models, a Monte Carlo
harness, and a numerical certifier for the landscape constants round out
the toolkit.
"""

from .amplitude import least_squares_amplitudes, quadratic_amplitudes
from .constants import CertificationInput, certify, display_3sig, report_lines
from .errors import (
    ClusterCountError,
    DegenerateDataError,
    EstimationError,
    IllPosedSubspaceError,
    MinimaDeficitError,
    NoSignalError,
    NumericalInstabilityError,
    RankDeficiencyError,
    SeparationUndefinedError,
)
from .estimator import (
    EstimatorConfig,
    FixedIterations,
    GradientTermination,
    classical_music,
    descend,
    full_pipeline,
    gradient_music,
    make_grid,
    uniform_grid,
)
from .harness import (
    ExperimentSpec,
    default_signal,
    landscape_sweep,
    run_experiment,
    run_slope_matrix,
    runtime_benchmark,
)
from .landscape import LandscapeHandle, dirichlet, fejer, steering
from .noise import (
    DeterministicNoise,
    GaussianDiagonal,
    draw,
    lp_norm,
    toeplitz_norm_check,
)
from .signal import (
    SampleVector,
    SignalParams,
    matching_distance,
    min_separation,
    reflect_extend,
    synthesize,
)
from .subspace import (
    Subspace,
    ToeplitzOperator,
    detect_sparsity,
    sine_theta,
    toeplitz,
    toeplitz_estimator,
)

__version__ = "0.1.0"

__all__ = [
    "CertificationInput",
    "ClusterCountError",
    "DegenerateDataError",
    "DeterministicNoise",
    "EstimationError",
    "EstimatorConfig",
    "ExperimentSpec",
    "FixedIterations",
    "GaussianDiagonal",
    "GradientTermination",
    "IllPosedSubspaceError",
    "LandscapeHandle",
    "MinimaDeficitError",
    "NoSignalError",
    "NumericalInstabilityError",
    "RankDeficiencyError",
    "SampleVector",
    "SeparationUndefinedError",
    "SignalParams",
    "Subspace",
    "ToeplitzOperator",
    "certify",
    "classical_music",
    "default_signal",
    "descend",
    "detect_sparsity",
    "dirichlet",
    "display_3sig",
    "draw",
    "fejer",
    "full_pipeline",
    "gradient_music",
    "landscape_sweep",
    "least_squares_amplitudes",
    "lp_norm",
    "make_grid",
    "matching_distance",
    "min_separation",
    "quadratic_amplitudes",
    "reflect_extend",
    "report_lines",
    "run_experiment",
    "run_slope_matrix",
    "runtime_benchmark",
    "sine_theta",
    "steering",
    "synthesize",
    "toeplitz",
    "toeplitz_estimator",
    "toeplitz_norm_check",
    "uniform_grid",
]
