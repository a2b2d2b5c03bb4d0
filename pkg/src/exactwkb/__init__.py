"""Exact-WKB spectral solver for 1D Schrodinger equations with polynomial potentials."""

from .errors import (
    BracketFailure,
    DivergentSector,
    ExactWkbError,
    IllConditioned,
    NoRoot,
    NotContracting,
    NotConverged,
    Overflow,
    PoleAtLambda,
    TurningPointOnPath,
    ValidationError,
)
from .potential import (
    BetaExpansion,
    PolynomialPotential,
    ProblemParameters,
    beta_expansion,
    beta_minus_one,
    conjugate,
    derive_parameters,
    translate,
)

__all__ = [
    "BetaExpansion",
    "BracketFailure",
    "DivergentSector",
    "ExactWkbError",
    "IllConditioned",
    "NoRoot",
    "NotContracting",
    "NotConverged",
    "Overflow",
    "PoleAtLambda",
    "PolynomialPotential",
    "ProblemParameters",
    "TurningPointOnPath",
    "ValidationError",
    "beta_expansion",
    "beta_minus_one",
    "conjugate",
    "derive_parameters",
    "translate",
]
