"""Level 1: mechanical sub-score, composite postural score, cell summaries, session change."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DivisionByZeroError
from .ingest import CONDITIONS, FEATURES, SESSIONS, GaitObservation
from .preprocess import FeatureMatrix, quantile

# Canonical weights. Not configurable; see custom_scores for user weights.
S_MECA_WEIGHTS = {
    "v": 0.15,
    "c": 0.15,
    "D": -0.10,
    "A": -0.10,
    "A_P": -0.10,
    "A_L": -0.05,
    "L": 0.10,
}
COP_WEIGHT = 0.15
CAPA_WEIGHT = 1.0

# Full 9-vector of GPPS weights in FEATURES order.
GPPS_WEIGHTS = np.array(
    [S_MECA_WEIGHTS.get(f, 0.0) for f in FEATURES[:7]] + [COP_WEIGHT, CAPA_WEIGHT]
)
S_MECA_VECTOR = np.array([S_MECA_WEIGHTS[f] for f in FEATURES[:7]] + [0.0, 0.0])


class EmptyCellWarning(UserWarning):
    pass


def _get(x, name):
    if isinstance(x, Mapping):
        return x[name]
    return getattr(x, name)


def s_meca(x: GaitObservation | Mapping[str, float]) -> float:
    return (
        0.15 * _get(x, "v")
        + 0.15 * _get(x, "c")
        - 0.10 * _get(x, "D")
        - 0.10 * _get(x, "A")
        - 0.10 * _get(x, "A_P")
        - 0.05 * _get(x, "A_L")
        + 0.10 * _get(x, "L")
    )


def gpps_from_parts(s_meca_value: float, cop: float, capa: float) -> float:
    return s_meca_value + COP_WEIGHT * cop + capa


def gpps(x: GaitObservation | Mapping[str, float]) -> float:
    return gpps_from_parts(s_meca(x), _get(x, "CoP"), _get(x, "CAPA"))


@dataclass(frozen=True)
class ScoreRecord:
    obs_id: int
    session: str
    condition: str
    s_meca: float
    gpps: float


@dataclass(frozen=True)
class ScoreSummary:
    condition: str
    session: str
    n: int
    mean: float
    sd: float
    median: float
    q1: float
    q3: float


@dataclass(frozen=True)
class DeltaRecord:
    condition: str
    gpps_m1_mean: float
    gpps_m2_mean: float
    delta_percent: float


def score_matrix(m: FeatureMatrix) -> list[ScoreRecord]:
    """Score every row of a feature matrix (normalized or raw, caller's choice)."""
    values = m.values
    sm = values @ S_MECA_VECTOR
    g = sm + COP_WEIGHT * values[:, 7] + CAPA_WEIGHT * values[:, 8]
    return [
        ScoreRecord(int(i), str(s), str(c), float(a), float(b))
        for i, s, c, a, b in zip(m.obs_ids, m.sessions, m.conditions, sm, g)
    ]


def custom_scores(m: FeatureMatrix, weights: Mapping[str, float]) -> np.ndarray:
    """Composite score under user-supplied weights (sensitivity analysis only)."""
    unknown = set(weights) - set(FEATURES)
    if unknown:
        raise ValueError(f"unknown feature weights: {sorted(unknown)}")
    w = np.array([weights.get(f, 0.0) for f in FEATURES])
    return m.values @ w


def _cell_order(key):
    condition, session = key
    return (CONDITIONS.index(condition), SESSIONS.index(session))


def summarize_scores(
    scores: Sequence[ScoreRecord],
    cells: Iterable[tuple[str, str]] | None = None,
) -> list[ScoreSummary]:
    """Per (condition, session) summary of GPPS.

    Requested cells with no records trigger an EmptyCellWarning and are skipped.
    """
    groups: dict[tuple[str, str], list[float]] = {}
    for r in scores:
        groups.setdefault((r.condition, r.session), []).append(r.gpps)

    wanted = sorted(set(cells) if cells is not None else set(groups), key=_cell_order)
    out = []
    for key in wanted:
        vals = groups.get(key)
        if not vals:
            warnings.warn(f"no scores for cell {key[0]}/{key[1]}", EmptyCellWarning, stacklevel=2)
            continue
        x = np.asarray(vals, dtype=np.float64)
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        out.append(
            ScoreSummary(
                condition=key[0],
                session=key[1],
                n=int(x.size),
                mean=float(np.mean(x)),
                sd=sd,
                median=quantile(x, 0.5),
                q1=quantile(x, 0.25),
                q3=quantile(x, 0.75),
            )
        )
    return out


def delta_percent(m1_mean: float, m2_mean: float) -> float:
    if m1_mean == 0:
        raise DivisionByZeroError("relative change undefined when the M1 mean is 0")
    return (m2_mean - m1_mean) / m1_mean * 100.0


def session_deltas(summaries: Sequence[ScoreSummary]) -> list[DeltaRecord]:
    """Relative M1 -> M2 change of the cell means, for conditions present in both sessions.

    A zero M1 mean yields delta_percent = nan rather than an exception.
    """
    by_cell = {(s.condition, s.session): s for s in summaries}
    out = []
    for condition in CONDITIONS:
        m1, m2 = by_cell.get((condition, "M1")), by_cell.get((condition, "M2"))
        if m1 is None or m2 is None:
            continue
        try:
            d = delta_percent(m1.mean, m2.mean)
        except DivisionByZeroError:
            d = math.nan
        out.append(DeltaRecord(condition, m1.mean, m2.mean, d))
    return out
