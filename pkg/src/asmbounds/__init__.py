"""Active subspace approximation with Poincare-type error bounds.

Modules:

``linalg``        symmetric eigensolver, rotations, orthogonal splits
``distributions`` input laws and exact conditional samplers
``asm``           gradient matrix estimation, surrogate and nested-MC error
``bounds``        Poincare constants and bound assembly
``exp_analysis``  closed forms for exponentially distributed inputs
``oracles``       independent numerical cross-checks
``cli``           command-line figure data and bound checks
"""

from .errors import (
    EvaluationError,
    GammaRangeError,
    InvalidInputError,
    NoConvergenceError,
    UnsupportedConditionalError,
)

__version__ = "0.1.0"

__all__ = [
    "EvaluationError",
    "GammaRangeError",
    "InvalidInputError",
    "NoConvergenceError",
    "UnsupportedConditionalError",
    "__version__",
]
