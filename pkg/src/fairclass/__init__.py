"""Features annealed independence rules for high-dimensional two-class
classification."""

from .data import LabeledDataset, SplitSpec, load_matrix, standardize_samples, stratified_split
from .errors import ConvergenceError, DataError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConvergenceError",
    "DataError",
    "LabeledDataset",
    "SplitSpec",
    "load_matrix",
    "standardize_samples",
    "stratified_split",
]
