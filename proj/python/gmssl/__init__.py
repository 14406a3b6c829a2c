"""Python interface to the graph-matching SSL core.

The heavy lifting lives in the compiled `_gmssl` extension; this package
re-exports its operations.
"""

from _gmssl import (  # noqa: F401
    CapabilityError,
    ParamError,
    gen_corpus,
    grad_check,
    gumbel_sample,
    hamming_loss,
    imle_step,
    knn_adjacency,
    matching_objective,
    solve,
    solve_lap,
    __version__,
)

__all__ = [
    "CapabilityError",
    "ParamError",
    "gen_corpus",
    "grad_check",
    "gumbel_sample",
    "hamming_loss",
    "imle_step",
    "knn_adjacency",
    "matching_objective",
    "solve",
    "solve_lap",
    "__version__",
]
