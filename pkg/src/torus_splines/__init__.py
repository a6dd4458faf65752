"""Periodic L-splines on the d-torus and TV-regularized reconstruction."""

from .errors import InadmissibleMeasurement, InvalidSpline, SolverError, TorusSplinesError, ValidationError
from .fourier import GridFunction, SymbolTable, analyze, evaluate, pair, sobolev_norm, synthesize
from .measurements import (
    AdmissibilityVerdict,
    Fourier,
    Profile,
    Spatial,
    l2_admissible,
    measure,
    measurement_column,
    nullspace_injectivity,
    sampling_admissible,
)
from .operators import (
    DerivativePower,
    ExponentialShift,
    FractionalDerivative,
    FractionalLaplacian,
    HarmonicPair,
    ModulatedDerivative,
    RadialGreen,
    Separable,
    Sobolev,
    green_table,
    verify_pseudoinverse,
)
from .radial import WENDLAND_EXAMPLE, CompactPolynomial, Matern, TabulatedRadial, matern_radial, radial_green_coeffs
from .solver import (
    ReconProblem,
    Solution,
    SolverConfig,
    build_system,
    extract_spline,
    lambda_max,
    objective,
    solve_tikhonov,
    solve_tv,
)
from .splines import (
    Innovations,
    Spline,
    annihilation_check,
    apply_operator,
    innovation_matrix,
    spline_table,
    validate_innovations,
)

__version__ = "0.1.0"
