"""Numerical laboratory for cone Moser-Trudinger inequalities and the
associated degenerate Dirichlet problem on the stretched cone."""

from .domain import (ConeDomain, DomainKind, GridFunction, LogGrid, bounded_strip,
                     cone_gradient, from_log, full_cone, grid_function_from_binary,
                     grid_function_to_binary, grid_function_to_csv, integrate,
                     log_pullback, to_log)
from .norms import (NFunction, NormSpec, dirichlet_seminorm, h1_norm, h1_seminorm,
                    lp_gamma_norm, luxemburg_norm)
from .mellin import (HalfLineFunction, MellinSamples, identity_suite, mellin_at,
                     mellin_inverse, mellin_to_csv, mellin_transform, plancherel_check)
from .rearrange import (OMEGA_1, RadialProfile, integrate_transformed,
                        polya_szego_gap, profile_to_csv, rearrange, reduce_to_1d)
from .mt_lab import (ALPHA_2, MoserBump2D, MoserFunction, MTParams, blowup_profile,
                     endpoint_limit_constant, moser_function_2d, moser_sequence,
                     mt_functional, mt_ratio, one_d_functional, radial_dirichlet_sq,
                     radial_l2_sq, scale_map)
from .operator import (DiscreteOperator, EigenResult, apply, energy_product,
                       first_eigenvalue, riesz_gradient, solve)
from .mountain_pass import (MPResult, NonlinearitySpec, energy, find_endpoint,
                            gradient, mp_solve, newton_refine, validate_conditions)

__version__ = "0.1.0"
