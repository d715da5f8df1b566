"""Hypercube quiver representations, the functors between their categories,
and symbolic verification of the solution data of the attached D-modules."""

from .functors import functor_G, functor_Q, predict_A, roundtrip_check
from .kernels import (
    ConvergenceError,
    SingularMatrixError,
    expm_2pii,
    in_sigma1,
    psi,
    psi_inv,
    spectrum,
    strip_log,
)
from .quiver import (
    Category,
    CategoryError,
    QuiverMorphism,
    QuiverRep,
    conjugate,
    direct_sum,
    dualize,
    dualize_morphism,
    generate,
    validate,
    validate_morphism,
)
from .report import ValidationReport

__version__ = "0.1.0"

__all__ = [
    "Category",
    "CategoryError",
    "ConvergenceError",
    "QuiverMorphism",
    "QuiverRep",
    "SingularMatrixError",
    "ValidationReport",
    "conjugate",
    "direct_sum",
    "dualize",
    "dualize_morphism",
    "expm_2pii",
    "functor_G",
    "functor_Q",
    "generate",
    "in_sigma1",
    "predict_A",
    "psi",
    "psi_inv",
    "roundtrip_check",
    "spectrum",
    "strip_log",
    "validate",
    "validate_morphism",
]
