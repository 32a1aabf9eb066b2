"""Support and continuity of killed exponential functionals of Levy processes.

Symbolic classification lives in :mod:`levyexp.classify`, Monte Carlo in
:mod:`levyexp.simulate` and statistical checks in :mod:`levyexp.verify`.
"""

from .model import (LevyTriplet, ProcessSpec, brownian, compound_poisson, deterministic,
                    poisson, spec, zero_process)
from .calculus import (IntegrandFunction, check_acp, check_hartman_wintner, check_hawkes,
                       check_kallenberg, transform_triplet)
from .classify import (LawVerdict, SupportDescriptor, classify_ac_unkilled,
                       classify_continuity_killed, classify_deterministic_integrand,
                       classify_fixed_t, classify_support)
from .simulate import RngStream, SampleBatch, SimParams

__version__ = "0.1.0"

__all__ = [
    "LevyTriplet", "ProcessSpec", "brownian", "compound_poisson", "deterministic", "poisson",
    "spec", "zero_process", "IntegrandFunction", "check_acp", "check_hartman_wintner",
    "check_hawkes", "check_kallenberg", "transform_triplet", "LawVerdict", "SupportDescriptor",
    "classify_ac_unkilled", "classify_continuity_killed", "classify_deterministic_integrand",
    "classify_fixed_t", "classify_support", "RngStream", "SampleBatch", "SimParams",
]
