"""Optimal L^p Hardy-type and Rellich-type weights on radially symmetric domains.

Modules: ``domain`` (domains, Green profiles), ``calculus`` (radial
p-Laplacian, coarea identities), ``weights`` (weight constructions),
``energy`` (grids and energy functionals), ``optimality`` (numerical checks of
optimality), ``rellich`` (Rellich-type inequalities) and ``cli``.
"""

from .domain import ProblemParams, RadialDomain, green_radial
from .errors import HardyOptError, NumericalError, PreconditionError

__all__ = ["ProblemParams", "RadialDomain", "green_radial", "HardyOptError", "NumericalError", "PreconditionError"]
__version__ = "0.1.0"
