"""Sphere-packing exponents and finite-blocklength lower bounds for symmetric
classical-quantum channels, with exact small-instance oracles."""

from .bound import BoundReport, n_thresholds, nagaoka_exact_errors, sp_bound
from .channel import SymmetricCqChannel, empirical_distribution, preset
from .divergence import (
    capacity,
    conditional_renyi,
    mutual_information,
    mutual_information_and_capacity,
    petz_renyi,
    r_infinity,
)
from .errors import ConvergenceError, DomainError, SpherePackError, SupportBlowupError, ValidationError
from .exponent import (
    ExponentPoint,
    SaddlePoint,
    curvature_bound,
    e0,
    esp_curve,
    esp_point,
    invariance_check,
    saddle_fixed_point,
    sigma_star,
)
from .largedev import NsPair, brr_lower_bound, cumulants, extremal_constants, legendre, nussbaum_szkola
from .oracle import classical_np_product, exact_tail, min_type1, min_type1_product, type_errors

__version__ = "0.1.0"
