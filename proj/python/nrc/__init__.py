"""Representation-based classification with NNLS (ADMM), ridge, and lasso coders.

Matrices follow the dictionary convention: a D x N array holds N samples as
columns. See the project README for the CLI and file formats.
"""

from ._core import (
    PCA,
    Classifier,
    NrcError,
    __version__,
    lasso,
    nnls,
    nnls_oracle,
    read_idx,
    ridge,
    soft_threshold,
)

__all__ = [
    "PCA",
    "Classifier",
    "NrcError",
    "__version__",
    "lasso",
    "nnls",
    "nnls_oracle",
    "read_idx",
    "ridge",
    "soft_threshold",
]
