"""Probabilistic stability regions of randomized Taylor schemes."""

__version__ = "0.1.0"

from .core import (DomainError, OrderTooLarge, RandTaylorError, RationalComplex,
                   exp_taylor_partial, f_eval, parse_complex, step_coeffs)
from .quadrature import (NonConvergent, QuadratureConfig, adaptive_integrate,
                         locate_step_root, log_abs_linear_primitive)
from .stability import (Membership, StabilityVerdict, as_function, classify, ms_function,
                        ms_function_exact, ref_sq)
from .regions import (GridSpec, audit_inclusions, contours, estimate_gamma,
                      min_order_for_ms, scan)
from .montecarlo import (RngSeed, empirical_F, empirical_G, empirical_classification,
                         simulate_log_trajectory)
from .scheme import IVPSpec, SchemeConfig, convergence_study, integrate, step
