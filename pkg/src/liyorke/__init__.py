"""Numerical laboratory for Li-Yorke tuples of Manneville-Pomeau maps."""

from .errors import (BoxOverflow, DomainError, EmptyWindow, MeshMisaligned,
                     NonConvergence, NonPositiveValues)
from .maps import Branch, MapSpec, branch_of, derivative, dist, eval_n, evaluate

__version__ = "0.1.0"

__all__ = [
    "Branch", "MapSpec", "evaluate", "eval_n", "branch_of", "derivative", "dist",
    "DomainError", "NonConvergence", "MeshMisaligned", "EmptyWindow",
    "NonPositiveValues", "BoxOverflow",
]
