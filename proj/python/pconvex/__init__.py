"""Weighted L2 estimates for the exterior derivative on p-convex domains."""

import json

from ._core import (
    CohomologyObstruction,
    Complex,
    ConfigError,
    Error,
    Expr,
    F_matrix,
    NotClosed,
    PreconditionError,
    ShapeError,
    SyntaxError,
    binomial,
    builtins,
    cohomology_rank,
    hormander_ratio,
    min_p_trace,
    minimal_solution,
    p_positivity,
)
from ._core import run_config as _run_config

__all__ = [
    "CohomologyObstruction",
    "Complex",
    "ConfigError",
    "Error",
    "Expr",
    "F_matrix",
    "NotClosed",
    "PreconditionError",
    "ShapeError",
    "SyntaxError",
    "binomial",
    "builtins",
    "cohomology_rank",
    "hormander_ratio",
    "min_p_trace",
    "minimal_solution",
    "p_positivity",
    "run_config",
]


def run_config(text, seed=None):
    """Run an INI experiment given as text; returns (task, pass, records)."""
    task, ok, records = _run_config(text, seed)
    return task, ok, [json.loads(r) for r in records]
