"""Player ratings from pairwise game results.

Strengths ``x_i = exp(r_i)`` are found by a damped fixed-point iteration
over a sparse score matrix; a dense eigenvector oracle checks the answer.
"""

from .degeneracy import DegeneracyReport, Verdict, analyze, recommend
from .errors import (
    DegenerateProblemError,
    InvalidGameError,
    OracleError,
    PriorError,
    RatingError,
    SolverStateError,
    UnknownPlayerWarning,
)
from .model import (
    GameRecord,
    PriorRating,
    PriorTable,
    ScoreMatrix,
    SolveResult,
    SolverConfig,
    Variant,
    aggregate,
    aggregate_indexed,
    loss_totals,
    merge_priors,
)
from .solver import (
    consistency_residuals,
    convergence_delta,
    normalize,
    solve,
    step_iter1,
    step_iter2,
)

__version__ = "0.1.0"

__all__ = [
    "DegeneracyReport", "Verdict", "analyze", "recommend",
    "DegenerateProblemError", "InvalidGameError", "OracleError", "PriorError",
    "RatingError", "SolverStateError", "UnknownPlayerWarning",
    "GameRecord", "PriorRating", "PriorTable", "ScoreMatrix", "SolveResult",
    "SolverConfig", "Variant", "aggregate", "aggregate_indexed", "loss_totals",
    "merge_priors",
    "consistency_residuals", "convergence_delta", "normalize", "solve",
    "step_iter1", "step_iter2",
]
