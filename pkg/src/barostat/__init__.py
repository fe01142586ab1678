"""Numerical laboratory for barotropic viscous flow under a large potential force.

The package constructs hydrostatic equilibria (including ones with vacuum
regions), integrates the time-dependent system in 1D/2D with no-slip walls,
and verifies the energy/entropy machinery that drives exponential relaxation:
gap functionals, a discrete divergence inverse with zero boundary values,
mollification commutators, and a cross-term-corrected energy functional whose
decay is fitted and checked against its dissipation counterpart.
"""

from .fields import (
    GasParams,
    Grid,
    ScalarField,
    VectorField,
    div,
    grad,
    integrate,
    lap,
    lp_norm,
    mean,
    read_snapshot,
    write_snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "GasParams",
    "integrate",
    "mean",
    "grad",
    "div",
    "lap",
    "lp_norm",
    "write_snapshot",
    "read_snapshot",
    "__version__",
]
