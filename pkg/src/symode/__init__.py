"""Exact Bayesian solution of ODEs that admit a solvable symmetry algebra.

The solver verifies the symmetry numerically, moves to canonical
coordinates where the equation is an integral, places a constrained basis
prior on the transformed solution, conditions exactly on gradient-field
evaluations, samples the constrained posterior by exact Hamiltonian Monte
Carlo, and pushes the sample curves back to the original coordinates.
"""

from .charts import FirstOrderFamily, SecondOrderFamily
from .expr import Expression, evaluate, parse, to_text
from .pipeline import (
    ConfigError,
    PipelineError,
    PosteriorEnsemble,
    SolveConfig,
    reference_first_order,
    reference_second_order,
    rmse,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "Expression",
    "parse",
    "evaluate",
    "to_text",
    "FirstOrderFamily",
    "SecondOrderFamily",
    "SolveConfig",
    "PosteriorEnsemble",
    "ConfigError",
    "PipelineError",
    "solve",
    "rmse",
    "reference_first_order",
    "reference_second_order",
    "__version__",
]
