"""Extension-problem machinery for the fractional heat operator.

Weighted heat kernels and Gaussian measures, Hermite-Laguerre spectral
bases, a finite-volume solver for the degenerate extension equation,
Almgren-Poon/Weiss/Monneau/ACF monotonicity functionals, and blow-up
classification of nodal points.
"""

__version__ = "0.1.0"

from .gaussmeasure import (ExtensionParams, QuadratureRule, build_quadrature,
                           fundamental_constant, fundamental_solution,
                           integrate, measure_density, poisson_kernel,
                           whole_space_integrate)
from .polynomials import XYTPoly, caloric_extension
from .specfun import hermite_1d, hermite_nd, laguerre
from .spectral import (DIRICHLET, NEUMANN, WHOLE_EVEN, WHOLE_ODD, EigenIndex,
                       SeparatedFunction, admissible_frequencies,
                       all_indices, eigen_norm, eigenfunction, eigenspace,
                       eigenvalue, extremal_boundary, extremal_x,
                       gram_matrix, ou_residual, poincare_constant,
                       poincare_corpus, poincare_ratio, theta_poly,
                       theta_value)
from .extension import (AccuracyError, ExtrapolationError,
                        conormal_constant, conormal_derivative, extend,
                        extended_function, fractional_heat)
from .solver import (GridField, GridSpec, PotentialField, SmoothCutoff,
                     apply_cutoff, boundary_flux, discrete_mass, evaluate,
                     solve_extension, trace_values)
from .frequency import (CalibrationError, FieldHandle, FrequencyProfile,
                        GridHandle, PolyField, VanishingOrder, acf_j,
                        averaged, calibrate_constant, frequency_profile,
                        grid_min_radius, instant_energies, monneau, phi_a,
                        quotients, radius_ladder, t_sigma, vanishing_order,
                        weiss)
from .blowup import (BlowupError, InfiniteOrderError, NodalClassification,
                     SnapError, TangentMap, classify_nodal_point,
                     expansion_remainder, homogeneity_residual,
                     project_coefficients, recenter, rescale,
                     scan_nodal_candidates, spatial_dimension, tangent_map)

__all__ = [
    "__version__",
    # gaussmeasure
    "ExtensionParams", "QuadratureRule", "build_quadrature",
    "fundamental_constant", "fundamental_solution", "integrate",
    "measure_density", "poisson_kernel", "whole_space_integrate",
    # polynomials
    "XYTPoly", "caloric_extension",
    # specfun
    "hermite_1d", "hermite_nd", "laguerre",
    # spectral
    "DIRICHLET", "NEUMANN", "WHOLE_EVEN", "WHOLE_ODD", "EigenIndex",
    "SeparatedFunction", "admissible_frequencies", "all_indices",
    "eigen_norm", "eigenfunction", "eigenspace", "eigenvalue",
    "extremal_boundary", "extremal_x", "gram_matrix", "ou_residual",
    "poincare_constant", "poincare_corpus", "poincare_ratio", "theta_poly",
    "theta_value",
    # extension
    "AccuracyError", "ExtrapolationError", "conormal_constant",
    "conormal_derivative", "extend", "extended_function", "fractional_heat",
    # solver
    "GridField", "GridSpec", "PotentialField", "SmoothCutoff",
    "apply_cutoff", "boundary_flux", "discrete_mass", "evaluate",
    "solve_extension", "trace_values",
    # frequency
    "CalibrationError", "FieldHandle", "FrequencyProfile", "GridHandle",
    "PolyField", "VanishingOrder", "acf_j", "averaged",
    "calibrate_constant", "frequency_profile", "grid_min_radius",
    "instant_energies", "monneau", "phi_a", "quotients", "radius_ladder",
    "t_sigma", "vanishing_order", "weiss",
    # blowup
    "BlowupError", "InfiniteOrderError", "NodalClassification", "SnapError",
    "TangentMap", "classify_nodal_point", "expansion_remainder",
    "homogeneity_residual", "project_coefficients", "recenter", "rescale",
    "scan_nodal_candidates", "spatial_dimension", "tangent_map",
]
