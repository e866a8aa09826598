"""Level 3: graph-based manifold embedding (kNN graph, fuzzy union, SGD layout)."""

from .core import EmbeddingParams, EmbeddingResult, embed
from .curve import fit_ab, phi_ab
from .graph import (
    CalibratedRow,
    FuzzyGraph,
    NeighborGraph,
    calibrate_graph,
    fuzzy_graph,
    fuzzy_union,
    knn_graph,
    smooth_knn_calibrate,
)
from .layout import layout_objective, optimize_layout

__all__ = [
    "CalibratedRow",
    "EmbeddingParams",
    "EmbeddingResult",
    "FuzzyGraph",
    "NeighborGraph",
    "calibrate_graph",
    "embed",
    "fit_ab",
    "fuzzy_graph",
    "fuzzy_union",
    "knn_graph",
    "layout_objective",
    "optimize_layout",
    "phi_ab",
    "smooth_knn_calibrate",
]
