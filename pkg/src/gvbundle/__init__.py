"""Exact symbolic kernel for graded manifolds and graded vector bundles."""

from .grading import GradedDimension, gdim_convolve, gdim_dual, gdim_shift
from .matrix import GradedMatrix, dual_transpose, invert, signed_transpose
from .scalar import CoeffExpr
from .series import DEFAULT_WEIGHT, GeneratorSignature, GradedFunction, koszul_sign, series_mul

__all__ = [
    "CoeffExpr",
    "DEFAULT_WEIGHT",
    "GeneratorSignature",
    "GradedDimension",
    "GradedFunction",
    "GradedMatrix",
    "dual_transpose",
    "gdim_convolve",
    "gdim_dual",
    "gdim_shift",
    "invert",
    "koszul_sign",
    "series_mul",
    "signed_transpose",
]
