"""Escape rates, pressure gaps and survivor dimensions for Gibbs measures
on subshifts of finite type and Markov interval maps with small holes."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateHoleWarning, DepthCapExceeded, DepthMismatch,
                     EnumerationCapExceeded, EscrateError, InsufficientDigits,
                     InsufficientTail, NoConvergence, NoRoot, NotInRepeller,
                     NotMixingAfterRestriction, StateCapExceeded)
from .symbolic import (Subshift, SymbolicPoint, champernowne_digits, enumerate_cylinders,
                       is_mixing, prime_period, refine_cylinder)
from .thermo import (Potential, SpectralData, TransferMatrix, birkhoff_sum,
                     build_transfer_matrix, gibbs_constant_check, gibbs_measure,
                     leading_eigentriple, normalized_potential, pressure, spectral_data)
from .holes import (EscapeRateResult, HoleFamily, escape_rate, escape_sweep,
                    matrix_survival, perturbed_eigenvalue, perturbed_matrix,
                    predicted_limit, pressure_gap_ratio, eigenvalue_gap_ratio,
                    standard_hole_family)
from .geometry import (BallApproximation, ExprBranch, LinearBranch, MarkovIntervalMap,
                       ball_to_cylinders, cantor_map, cylinder_interval, doubling_map,
                       encode_point, log_deriv_potential, log_derivative_potential,
                       quadratic_toy_map)
from .dimension import DimensionResult, bowen_root, dimension_sweep, lyapunov_derivative
from .oracle import (SurvivalCurve, exhaustive_survival, fit_escape_rate, kac_check,
                     monte_carlo_survival)
