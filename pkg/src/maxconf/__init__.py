"""Maximum-confidence discrimination of symmetric pure states.

Single and sequential maximum-confidence measurements, their Neumark
realization, a seeded Monte Carlo sampler and a linear-optics compiler for
the four-state qutrit case.
"""

__version__ = "0.1.0"

from .core import DEFAULT_TOL, ParseError, QStateError, Tolerances
from .povm import me_povm, mc_povm_symmetric, validate_povm
from .smc import compare_me, plan
from .symmetric import SymmetricSet, make_root_set, make_set

__all__ = [
    "DEFAULT_TOL",
    "ParseError",
    "QStateError",
    "SymmetricSet",
    "Tolerances",
    "compare_me",
    "make_root_set",
    "make_set",
    "mc_povm_symmetric",
    "me_povm",
    "plan",
    "validate_povm",
]
