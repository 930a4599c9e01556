"""Heterogeneous conditional-independence graphs on network-linked data.

Spectral network embedding + kernel score matching in a product-kernel RKHS.
"""
__version__ = "0.1.0"

from .embedding import ase, choose_dim, procrustes_align
from .errors import (DegenerateDataError, GeneratorError, InvalidInputError, NGMError,
                     RankDeficiencyError, SelectionError, SolverError)
from .graph import EdgeSetCollection, OmegaField, omega, threshold_edges
from .kernels import KernelConfig, gram, grad2_k1, hess12_k1, median_heuristic
from .metrics import ConfusionCounts, MetricReport, aggregate, confusion, metrics
from .score import (FitConfig, RepresenterModel, assemble_system, empirical_loss,
                    evaluate_score, fit, median_kernel, score_partials)
from .selection import CvPlan, cv_delta, cv_lambda, kfold_split

__all__ = [
    "__version__",
    "ase", "choose_dim", "procrustes_align",
    "NGMError", "InvalidInputError", "DegenerateDataError", "RankDeficiencyError",
    "SolverError", "SelectionError", "GeneratorError",
    "EdgeSetCollection", "OmegaField", "omega", "threshold_edges",
    "KernelConfig", "gram", "grad2_k1", "hess12_k1", "median_heuristic",
    "ConfusionCounts", "MetricReport", "aggregate", "confusion", "metrics",
    "FitConfig", "RepresenterModel", "assemble_system", "empirical_loss", "evaluate_score",
    "fit", "median_kernel", "score_partials",
    "CvPlan", "cv_delta", "cv_lambda", "kfold_split",
]
