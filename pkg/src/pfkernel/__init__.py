"""Persistence Fisher kernel on persistence diagrams.

Pipeline: point clouds -> persistence diagrams (``homology``) -> smoothed
measures (``measure``, optionally through the fast Gauss transform in
``fgt``) -> Fisher information distance (``metric``) -> kernels and Gram
matrices (``kernels``) -> SVM and KFDR (``learn``).
"""

__version__ = "0.1.0"

from .diagram import EssentialPolicy, PersistenceDiagram, load_diagram, read_diagram, write_diagram
from .kernels import PF, PSS, PWG, SW, Prob, GramMatrix, gram, quantile_t
from .measure import SmoothingParams
from .metric import fim, fim_distance, fim_matrix

__all__ = [
    "EssentialPolicy",
    "GramMatrix",
    "PF",
    "PSS",
    "PWG",
    "PersistenceDiagram",
    "Prob",
    "SW",
    "SmoothingParams",
    "fim",
    "fim_distance",
    "fim_matrix",
    "gram",
    "load_diagram",
    "quantile_t",
    "read_diagram",
    "write_diagram",
]
