"""Level 2: descriptive dispersion statistics of state-space trajectories.

A trajectory is the sequence of feature rows for one (condition, session)
cell in acquisition (file) order. No vector field is estimated; the three
statistics below only make "more/less dispersed" comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import TooFewPoints
from .ingest import CONDITIONS, SESSIONS
from .preprocess import FeatureMatrix


@dataclass(frozen=True)
class DispersionStats:
    mean_pairwise_dist: float
    rms_centroid_dist: float
    path_length: float
    n_points: int


@dataclass(frozen=True)
class CellDynamics:
    condition: str
    session: str
    stats: DispersionStats


def trajectory_dispersion(points) -> DispersionStats:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewPoints(f"need at least 2 trajectory points, got {x.shape[0] if x.ndim else 0}")
    centroid = x.mean(axis=0)
    steps = np.linalg.norm(np.diff(x, axis=0), axis=1)
    return DispersionStats(
        mean_pairwise_dist=float(pdist(x).mean()),
        rms_centroid_dist=float(np.sqrt(np.mean(np.sum((x - centroid) ** 2, axis=1)))),
        path_length=float(steps.sum()),
        n_points=int(x.shape[0]),
    )


def rank_compactness(stats: Sequence[tuple[str, DispersionStats]], key: str = "mean_pairwise") -> list[str]:
    """Conditions from most to least compact; ties fall back to label order."""
    attr = {"mean_pairwise": "mean_pairwise_dist", "rms_centroid": "rms_centroid_dist"}[key]
    return [label for label, _ in sorted(stats, key=lambda item: (getattr(item[1], attr), item[0]))]


def cell_dynamics(m: FeatureMatrix) -> list[CellDynamics]:
    """Dispersion per (condition, session) cell; cells with < 2 rows are skipped."""
    out = []
    for condition in CONDITIONS:
        for session in SESSIONS:
            mask = (m.conditions == condition) & (m.sessions == session)
            if mask.sum() < 2:
                continue
            out.append(CellDynamics(condition, session, trajectory_dispersion(m.values[mask])))
    return out
