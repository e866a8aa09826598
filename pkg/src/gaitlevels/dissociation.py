"""Score-similar but latent-separated condition pairs, plus embedding stability checks.

"Latent-separated" is an operational definition (standardized centroid
separation and two-group silhouette against explicit thresholds). Flagged
pairs indicate that the aggregate score alone does not identify the latent
organization; they carry no causal or clinical meaning.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score, silhouette_score

from .embedding import EmbeddingParams, EmbeddingResult, embed
from .errors import KTooLarge, MissingCondition, SessionMismatch, ShapeMismatch
from .ingest import CONDITIONS
from .level1 import ScoreSummary


@dataclass(frozen=True)
class Thresholds:
    score_factor: float = 0.5  # tau_score = score_factor * pooled SD
    tau_sep: float = 2.0
    tau_sil: float = 0.25


@dataclass(frozen=True)
class SeparationStats:
    cond_i: str
    cond_j: str
    centroid_dist: float
    pooled_spread: float
    standardized_sep: float
    silhouette: float


@dataclass(frozen=True)
class PairEvidence:
    cond_i: str
    cond_j: str
    gpps_gap: float
    pooled_sd: float
    tau_score: float
    iqr_overlap: bool
    score_similar: bool
    separation: SeparationStats
    latent_separated: bool

    @property
    def flagged(self) -> bool:
        return self.score_similar and self.latent_separated


@dataclass(frozen=True)
class DissociationReport:
    session: str
    thresholds: Thresholds
    pairs: tuple[PairEvidence, ...]

    @property
    def flagged(self) -> list[PairEvidence]:
        return [p for p in self.pairs if p.flagged]

    @property
    def unflagged(self) -> list[PairEvidence]:
        return [p for p in self.pairs if not p.flagged]


def _canonical(ci: str, cj: str) -> tuple[str, str]:
    key = lambda c: (CONDITIONS.index(c), c) if c in CONDITIONS else (len(CONDITIONS), c)
    return tuple(sorted((ci, cj), key=key))


def separation_stats(zi: np.ndarray, zj: np.ndarray, ci: str = "i", cj: str = "j") -> SeparationStats:
    """Centroid distance over pooled RMS radius, and the two-group silhouette.

    Symmetric in the two groups.
    """
    zi, zj = np.asarray(zi, dtype=np.float64), np.asarray(zj, dtype=np.float64)
    if len(zi) == 0 or len(zj) == 0:
        raise MissingCondition("separation needs points in both groups")
    ci_, cj_ = _canonical(ci, cj)
    if (ci_, cj_) != (ci, cj):
        zi, zj = zj, zi
    centroid_dist = float(np.linalg.norm(zi.mean(axis=0) - zj.mean(axis=0)))
    ss = np.sum((zi - zi.mean(axis=0)) ** 2) + np.sum((zj - zj.mean(axis=0)) ** 2)
    pooled = float(np.sqrt(ss / (len(zi) + len(zj))))
    if pooled > 0:
        sep = centroid_dist / pooled
    else:
        sep = math.inf if centroid_dist > 0 else 0.0

    z = np.vstack([zi, zj])
    labels = np.r_[np.zeros(len(zi), dtype=int), np.ones(len(zj), dtype=int)]
    if 2 <= len(z) - 1 and len(np.unique(z, axis=0)) > 1:
        sil = float(silhouette_score(z, labels))
    else:
        sil = 0.0
    return SeparationStats(ci_, cj_, centroid_dist, pooled, sep, sil)


def pooled_sd(a: ScoreSummary, b: ScoreSummary) -> float:
    dof = a.n + b.n - 2
    if dof <= 0:
        return 0.0
    return math.sqrt(((a.n - 1) * a.sd**2 + (b.n - 1) * b.sd**2) / dof)


def score_similarity(a: ScoreSummary, b: ScoreSummary, thresholds: Thresholds = Thresholds()):
    """(gap, pooled SD, tau_score, IQR overlap, similar?) for two cell summaries."""
    gap = abs(a.mean - b.mean)
    psd = pooled_sd(a, b)
    tau = thresholds.score_factor * psd
    overlap = max(a.q1, b.q1) <= min(a.q3, b.q3)
    return gap, psd, tau, overlap, (gap <= tau and overlap)


def latent_separated(sep: SeparationStats, thresholds: Thresholds = Thresholds()) -> bool:
    return sep.standardized_sep >= thresholds.tau_sep and sep.silhouette >= thresholds.tau_sil


def _session_of(summaries: Sequence[ScoreSummary], session: str | None) -> str:
    sessions = sorted({s.session for s in summaries})
    if session is None:
        if len(sessions) != 1:
            raise SessionMismatch(f"summaries span sessions {sessions}; choose one")
        return sessions[0]
    if session not in sessions:
        raise SessionMismatch(f"no summaries for session {session}")
    return session


def detect_dissociation(
    summaries: Sequence[ScoreSummary],
    emb: EmbeddingResult,
    thresholds: Thresholds = Thresholds(),
    session: str | None = None,
) -> DissociationReport:
    """Evaluate every condition pair of one session against both predicates."""
    session = _session_of(summaries, session)
    if emb.conditions is None or emb.sessions is None:
        raise SessionMismatch("embedding carries no session/condition labels")
    rows = emb.sessions == session
    if not rows.any():
        raise SessionMismatch(f"embedding has no rows for session {session}")

    cells = {s.condition: s for s in summaries if s.session == session}
    emb_conditions = set(emb.conditions[rows])
    if set(cells) - emb_conditions:
        raise MissingCondition(f"no embedded rows for {sorted(set(cells) - emb_conditions)}")
    if emb_conditions - set(cells):
        raise MissingCondition(f"no score summary for {sorted(emb_conditions - set(cells))}")

    ordered = [c for c in CONDITIONS if c in cells]
    pairs = []
    for ci, cj in itertools.combinations(ordered, 2):
        gap, psd, tau, overlap, similar = score_similarity(cells[ci], cells[cj], thresholds)
        sep = separation_stats(
            emb.z[rows & (emb.conditions == ci)], emb.z[rows & (emb.conditions == cj)], ci, cj
        )
        pairs.append(PairEvidence(ci, cj, gap, psd, tau, overlap, similar, sep, latent_separated(sep, thresholds)))
    return DissociationReport(session, thresholds, tuple(pairs))


def procrustes_disparity(emb_a, emb_b) -> float:
    """Residual after best translation, rotation/reflection and uniform scaling of b onto a,
    divided by the total sum of squares of centred a."""
    a = np.asarray(getattr(emb_a, "z", emb_a), dtype=np.float64)
    b = np.asarray(getattr(emb_b, "z", emb_b), dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeMismatch(f"cannot compare shapes {a.shape} and {b.shape}")
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    ssa, ssb = np.sum(a * a), np.sum(b * b)
    if ssa == 0:
        raise ShapeMismatch("reference configuration has zero variance")
    if ssb == 0:
        return 1.0
    trace = np.linalg.svd(a.T @ b, compute_uv=False).sum()
    return float(max(0.0, 1.0 - trace**2 / (ssa * ssb)))


def trustworthiness(m, emb, k: int = 15) -> float:
    """Rank-based penalty for embedded neighbours that are not high-dimensional neighbours."""
    x = np.asarray(getattr(m, "values", m), dtype=np.float64)
    z = np.asarray(getattr(emb, "z", emb), dtype=np.float64)
    n = x.shape[0]
    if z.shape[0] != n:
        raise ShapeMismatch(f"{n} data rows vs {z.shape[0]} embedded rows")
    if not 1 <= k < n / 2:
        raise KTooLarge(f"trustworthiness needs 1 <= k < N/2, got k={k}, N={n}")

    dx = cdist(x, x)
    dz = cdist(z, z)
    np.fill_diagonal(dx, np.inf)
    np.fill_diagonal(dz, np.inf)
    order_x = np.argsort(dx, axis=1, kind="stable")
    # rank[i, j] = position of j in i's high-dimensional ordering, nearest = 1
    rank = np.empty((n, n), dtype=np.int64)
    rank[np.arange(n)[:, None], order_x] = np.arange(1, n + 1)[None, :]
    nn_x = order_x[:, :k]
    nn_z = np.argsort(dz, axis=1, kind="stable")[:, :k]

    penalty = 0
    for i in range(n):
        u = np.setdiff1d(nn_z[i], nn_x[i], assume_unique=True)
        penalty += int(np.sum(rank[i, u] - k))
    return float(1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty)


def kmeans_labels(z: np.ndarray, n_clusters: int, seed: int = 0, restarts: int = 20) -> np.ndarray:
    km = KMeans(n_clusters=n_clusters, n_init=restarts, random_state=seed)
    return km.fit_predict(z)


@dataclass
class StabilityReport:
    seeds: list[int]
    n_clusters: int
    mean_ari: float
    mean_disparity: float
    per_pair: list[dict] = field(default_factory=list)
    condition_consistency: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _co_membership_agreement(la: np.ndarray, lb: np.ndarray) -> float:
    if la.size < 2:
        return 1.0
    sa = la[:, None] == la[None, :]
    sb = lb[:, None] == lb[None, :]
    iu = np.triu_indices(la.size, k=1)
    return float(np.mean(sa[iu] == sb[iu]))


def stability_assess(
    m,
    params: EmbeddingParams | None = None,
    seeds: Sequence[int] = (1, 2, 3, 4, 5),
    n_clusters: int | None = None,
    kmeans_seed: int = 0,
) -> StabilityReport:
    """Embed once per seed and compare every pair of runs (ARI of k-means partitions, Procrustes)."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("stability assessment needs at least two seeds")
    conditions = getattr(m, "conditions", None)
    if n_clusters is None:
        if conditions is None:
            raise ValueError("n_clusters is required when the matrix carries no condition labels")
        n_clusters = len(set(conditions))

    runs = [embed(m, params, seed) for seed in seeds]
    labels = [kmeans_labels(r.z, n_clusters, kmeans_seed) for r in runs]

    per_pair = []
    for (ia, ra), (ib, rb) in itertools.combinations(enumerate(runs), 2):
        per_pair.append(
            {
                "seed_a": seeds[ia],
                "seed_b": seeds[ib],
                "ari": float(adjusted_rand_score(labels[ia], labels[ib])),
                "disparity_ab": procrustes_disparity(ra.z, rb.z),
                "disparity_ba": procrustes_disparity(rb.z, ra.z),
            }
        )

    consistency = {}
    if conditions is not None:
        for c in [c for c in CONDITIONS if c in set(conditions)]:
            mask = conditions == c
            vals = [
                _co_membership_agreement(labels[ia][mask], labels[ib][mask])
                for ia, ib in itertools.combinations(range(len(runs)), 2)
            ]
            consistency[c] = float(np.mean(vals))

    return StabilityReport(
        seeds=seeds,
        n_clusters=n_clusters,
        mean_ari=float(np.mean([p["ari"] for p in per_pair])),
        mean_disparity=float(np.mean([p["disparity_ab"] for p in per_pair])),
        per_pair=per_pair,
        condition_consistency=consistency,
    )
