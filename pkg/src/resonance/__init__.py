"""Periodic solutions, resonance and instability for periodic differential equations.

Subpackages by topic:

- :mod:`resonance.expr`: expression language for coefficients and nonlinearities
- :mod:`resonance.ode`: adaptive Dormand-Prince integrator and periodic quadrature
- :mod:`resonance.smatrix`: small dense linear algebra with explicit tolerances
- :mod:`resonance.linear`: monodromy matrices, the Massera case analysis, adjoint solvability
- :mod:`resonance.scalar`: first-order scalar equations and the Landesman-Lazer interval
- :mod:`resonance.semilinear`: necessary condition and instability for semilinear systems
- :mod:`resonance.pendulum`: damped pendulum-like equations
- :mod:`resonance.curves`: global solution curves by trigonometric collocation
"""

from .errors import (
    ConvergenceError,
    HypothesisError,
    IntegrationError,
    NumericalError,
    PreconditionError,
    ProblemError,
    ResonanceError,
    SingularMatrixError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "HypothesisError",
    "IntegrationError",
    "NumericalError",
    "PreconditionError",
    "ProblemError",
    "ResonanceError",
    "SingularMatrixError",
    "__version__",
]
