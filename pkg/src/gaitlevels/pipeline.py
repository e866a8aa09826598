"""Glue between the levels: one dataset in, the per-level results out."""

from __future__ import annotations

from dataclasses import dataclass

from .config import RunConfig
from .dissociation import DissociationReport, StabilityReport, detect_dissociation, stability_assess
from .embedding import EmbeddingResult, embed
from .ingest import SESSIONS, GaitDataset, filter_linear_phases
from .level1 import DeltaRecord, ScoreRecord, ScoreSummary, score_matrix, session_deltas, summarize_scores
from .level2 import CellDynamics, cell_dynamics
from .preprocess import AuditLog, FeatureMatrix, ScalerParams, preprocess_pipeline


@dataclass(frozen=True)
class Prepared:
    dataset: GaitDataset
    raw: FeatureMatrix
    matrix: FeatureMatrix
    scaler: ScalerParams
    audit: AuditLog


@dataclass(frozen=True)
class ScoreTables:
    records: list[ScoreRecord]
    summaries: list[ScoreSummary]
    deltas: list[DeltaRecord]
    raw_mode: bool


def prepare(ds: GaitDataset, cfg: RunConfig) -> Prepared:
    filtered = filter_linear_phases(ds)
    matrix, scaler, audit = preprocess_pipeline(filtered, cfg.preprocess)
    return Prepared(filtered, FeatureMatrix.from_dataset(filtered), matrix, scaler, audit)


def sessions_for(prep: Prepared, session: str) -> list[str]:
    present = set(prep.matrix.sessions)
    if session == "both":
        return [s for s in SESSIONS if s in present]
    return [session] if session in present else []


def score_tables(prep: Prepared, cfg: RunConfig) -> ScoreTables:
    """GPPS on the preprocessed matrix, or on the untouched features in raw mode."""
    source = prep.raw if cfg.raw_scores else prep.matrix
    records = score_matrix(source)
    summaries = summarize_scores(records)
    return ScoreTables(records, summaries, session_deltas(summaries), cfg.raw_scores)


def dynamics_table(prep: Prepared) -> list[CellDynamics]:
    return cell_dynamics(prep.matrix)


def embed_session(prep: Prepared, cfg: RunConfig, session: str = "both", seed: int | None = None) -> EmbeddingResult:
    m = prep.matrix
    if session != "both":
        m = m.subset(m.sessions == session)
    return embed(m, cfg.embedding, cfg.seed if seed is None else seed)


def dissociate(prep: Prepared, cfg: RunConfig, session: str = "both"):
    """One report per session; each session is embedded on its own rows.

    Returns (reports, embeddings) in session order.
    """
    tables = score_tables(prep, cfg)
    reports: list[DissociationReport] = []
    embeddings: list[EmbeddingResult] = []
    for s in sessions_for(prep, session):
        emb = embed_session(prep, cfg, s)
        summaries = [x for x in tables.summaries if x.session == s]
        reports.append(detect_dissociation(summaries, emb, cfg.thresholds, session=s))
        embeddings.append(emb)
    return reports, embeddings


def stability(prep: Prepared, cfg: RunConfig, session: str = "both", seeds=None) -> StabilityReport:
    m = prep.matrix
    if session != "both":
        m = m.subset(m.sessions == session)
    return stability_assess(m, cfg.embedding, list(seeds or cfg.seeds), kmeans_seed=cfg.kmeans_seed)

