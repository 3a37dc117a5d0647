"""Ground states of the 2D rotational nonlinear Schrodinger equation.

Computes minimizers of the mass-constrained Gross-Pitaevskii energy with
a rotation term for subcritical interaction exponents 1 < p < 3, and the
diagnostics that probe the large-interaction limit: blow-up scale,
energy asymptotics, profile convergence and uniqueness up to phase.
"""

__version__ = "0.1.0"

from .grid import (
    ComplexField,
    GridSpec,
    RealField,
    integrate,
    laplacian,
    normalize,
    norms,
    rotation_term,
)
from .radial import RadialProfile, gn_constant, identities_residual, sample_to_grid, solve_w

__all__ = [
    "ComplexField",
    "GridSpec",
    "RadialProfile",
    "RealField",
    "__version__",
    "gn_constant",
    "identities_residual",
    "integrate",
    "laplacian",
    "normalize",
    "norms",
    "rotation_term",
    "sample_to_grid",
    "solve_w",
]
