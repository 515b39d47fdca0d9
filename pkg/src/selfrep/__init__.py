"""Overlap measures, replication checks and an entropy-floor toy model.

Classical states are finite probability vectors, quantum states are density
matrices; most operations dispatch on the backend of their arguments.
"""

__version__ = "0.1.0"

from .classical import JointProb, ProbVec, StochasticChannel, bhattacharyya, shannon_entropy
from .errors import DimensionMismatchError, InvalidStateError, NumericalError, SelfRepError
from .quantum import DensityMatrix, KrausChannel, uhlmann_fidelity
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "DEFAULT",
    "DensityMatrix",
    "DimensionMismatchError",
    "InvalidStateError",
    "JointProb",
    "KrausChannel",
    "NumericalError",
    "ProbVec",
    "SelfRepError",
    "StochasticChannel",
    "Tolerances",
    "bhattacharyya",
    "shannon_entropy",
    "uhlmann_fidelity",
]
