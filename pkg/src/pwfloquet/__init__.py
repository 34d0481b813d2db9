"""Floquet multipliers of linear renewal/delay equations by piecewise pseudospectral collocation."""

__version__ = "0.1.0"

from .analysis import (compute_multipliers, convergence_study, find_bifurcation,  # noqa: E402
                       nontrivial_test, parameter_sweep, stability_chart, stability_test)
from .basis import QuadratureRule, make_nodes  # noqa: E402
from .catalog import builtin  # noqa: E402
from .discretize import MethodOptions, MonodromyMatrices, assemble  # noqa: E402
from .model import (DelaySystem, PeriodicSolutionPW, delay_system, load_solution,  # noqa: E402
                    sample_solution)
from .spectra import (MultiplierSet, multipliers, multipliers_generalized,  # noqa: E402
                      multipliers_standard, trivial_index)

__all__ = [
    "DelaySystem", "PeriodicSolutionPW", "delay_system", "load_solution", "sample_solution",
    "MethodOptions", "MonodromyMatrices", "assemble", "QuadratureRule", "make_nodes",
    "MultiplierSet", "multipliers", "multipliers_standard", "multipliers_generalized",
    "trivial_index", "builtin", "compute_multipliers", "stability_test", "nontrivial_test",
    "parameter_sweep", "find_bifurcation", "stability_chart", "convergence_study",
]
