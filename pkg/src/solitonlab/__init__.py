"""Numerical laboratory for weighted geometric operators and the Soliton-Ricci flow.

Two model backends are supported: periodic flat-coordinate tori in dimension
2 and 3 (Fourier collocation) and the axisymmetric round 2-sphere chart
(cell-centered colatitude grid, pole-free).  On top of them the package
builds the weighted operator calculus (drift Laplacians, weighted adjoints,
curvature actions, Lichnerowicz-type operators), the entropy functional W
with its first and second variations, the pseudo-Riemannian pairing G on
metrics x volume forms, and an explicit integrator for the gauged
Soliton-Ricci flow, together with a machine-checkable identity suite.
"""

from .mesh import Grid, build_grid, integrate, partial_derivative
from .fields import (
    ScalarField,
    ComplexScalarField,
    VectorField,
    OneForm,
    SymTensor2,
    TwoForm,
    Endo,
    ScalarDensity,
)
from .riemann import MetricState

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "build_grid",
    "integrate",
    "partial_derivative",
    "ScalarField",
    "ComplexScalarField",
    "VectorField",
    "OneForm",
    "SymTensor2",
    "TwoForm",
    "Endo",
    "ScalarDensity",
    "MetricState",
    "__version__",
]
