"""Serialisation of run outputs: CSV tables, JSON reports, SVG scatter, markdown summary.

Formatting is fixed so reruns are byte-identical: 2 decimals for scores and
relative changes, 4 for latent coordinates and diagnostics.
"""

from __future__ import annotations

import csv
import io
import json
import math
from html import escape
from typing import Sequence

import numpy as np

from .dissociation import DissociationReport, StabilityReport
from .embedding import EmbeddingResult
from .ingest import CONDITIONS, SESSIONS
from .level1 import DeltaRecord, ScoreRecord, ScoreSummary
from .level2 import CellDynamics

SCORE_DP = 2
DIAG_DP = 4


def fmt(x: float | None, dp: int) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.{dp}f}"
    if s.startswith("-") and float(s) == 0:
        s = s[1:]
    return s


def _num(x: float, dp: int):
    """JSON number rounded to dp places; non-finite values become null."""
    if x is None or not math.isfinite(x):
        return None
    v = round(float(x), dp)
    return 0.0 if v == 0 else v


def _csv(rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO(newline="")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


def scores_csv(records: Sequence[ScoreRecord]) -> str:
    rows = [("obs_id", "session", "condition", "s_meca", "gpps")]
    rows += [(r.obs_id, r.session, r.condition, fmt(r.s_meca, SCORE_DP), fmt(r.gpps, SCORE_DP)) for r in records]
    return _csv(rows)


SUMMARY_STATS = ("mean", "sd", "median", "q1", "q3")


def summary_csv(summaries: Sequence[ScoreSummary], deltas: Sequence[DeltaRecord]) -> str:
    header = ["condition"]
    for s in ("m1", "m2"):
        header += [f"{s}_{stat}" for stat in SUMMARY_STATS]
    header.append("delta_percent")
    by_cell = {(s.condition, s.session): s for s in summaries}
    by_delta = {d.condition: d for d in deltas}
    rows = [header]
    for condition in CONDITIONS:
        cells = [by_cell.get((condition, s)) for s in SESSIONS]
        if not any(cells):
            continue
        row = [condition]
        for cell in cells:
            row += [fmt(getattr(cell, stat), SCORE_DP) if cell else "" for stat in SUMMARY_STATS]
        d = by_delta.get(condition)
        row.append(fmt(d.delta_percent, SCORE_DP) if d else "")
        rows.append(row)
    return _csv(rows)


def dynamics_csv(cells: Sequence[CellDynamics]) -> str:
    rows = [("condition", "session", "n_points", "mean_pairwise_dist", "rms_centroid_dist", "path_length")]
    for c in cells:
        s = c.stats
        rows.append(
            (
                c.condition,
                c.session,
                s.n_points,
                fmt(s.mean_pairwise_dist, DIAG_DP),
                fmt(s.rms_centroid_dist, DIAG_DP),
                fmt(s.path_length, DIAG_DP),
            )
        )
    return _csv(rows)


def embedding_csv(emb: EmbeddingResult) -> str:
    d = emb.z.shape[1]
    rows = [["obs_id", "session", "condition"] + [f"z{i + 1}" for i in range(d)]]
    for i in range(emb.n):
        rows.append(
            [int(emb.obs_ids[i]), emb.sessions[i], emb.conditions[i]] + [fmt(v, DIAG_DP) for v in emb.z[i]]
        )
    return _csv(rows)


def dissociation_payload(reports: Sequence[DissociationReport]) -> list[dict]:
    out = []
    for rep in reports:
        t = rep.thresholds
        thresholds = {
            "score_factor": t.score_factor,
            "tau_sep": t.tau_sep,
            "tau_sil": t.tau_sil,
        }
        for p in rep.pairs:
            s = p.separation
            out.append(
                {
                    "session": rep.session,
                    "cond_i": p.cond_i,
                    "cond_j": p.cond_j,
                    "gpps_gap": _num(p.gpps_gap, SCORE_DP),
                    "tau_score": _num(p.tau_score, DIAG_DP),
                    "iqr_overlap": p.iqr_overlap,
                    "score_similar": p.score_similar,
                    "centroid_dist": _num(s.centroid_dist, DIAG_DP),
                    "pooled_spread": _num(s.pooled_spread, DIAG_DP),
                    "standardized_sep": _num(s.standardized_sep, DIAG_DP),
                    "silhouette": _num(s.silhouette, DIAG_DP),
                    "latent_separated": p.latent_separated,
                    "flagged": p.flagged,
                    "thresholds": {**thresholds, "tau_score": _num(p.tau_score, DIAG_DP)},
                }
            )
    return out


def stability_payload(rep: StabilityReport) -> dict:
    return {
        "seeds": list(rep.seeds),
        "n_clusters": rep.n_clusters,
        "mean_ari": _num(rep.mean_ari, DIAG_DP),
        "mean_disparity": _num(rep.mean_disparity, DIAG_DP),
        "per_pair": [
            {
                "seed_a": p["seed_a"],
                "seed_b": p["seed_b"],
                "ari": _num(p["ari"], DIAG_DP),
                "disparity_ab": _num(p["disparity_ab"], DIAG_DP),
                "disparity_ba": _num(p["disparity_ba"], DIAG_DP),
            }
            for p in rep.per_pair
        ],
        "condition_consistency": {k: _num(v, DIAG_DP) for k, v in rep.condition_consistency.items()},
    }


# --- SVG ------------------------------------------------------------------

PALETTE = {
    "ONL": "#1b9e77",
    "OSL": "#d95f02",
    "OBL": "#7570b3",
    "OC2.5": "#e7298a",
    "OC3": "#66a61e",
    "OC3P": "#e6ab02",
}


def _marker(session: str, x: float, y: float, color: str) -> str:
    if session == "M1":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}" fill-opacity="0.75"/>'
    return (
        f'<rect x="{x - 3:.2f}" y="{y - 3:.2f}" width="6" height="6" fill="none" '
        f'stroke="{color}" stroke-width="1.2"/>'
    )


def embedding_svg(emb: EmbeddingResult, title: str = "Latent representation") -> str:
    """Static scatter of the first two latent axes, colour = condition, marker = session."""
    width, height, margin, legend_w = 640, 480, 50, 120
    z = emb.z[:, :2] if emb.z.shape[1] >= 2 else np.hstack([emb.z, np.zeros((emb.n, 1))])
    lo, hi = z.min(axis=0), z.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    plot_w = width - 2 * margin - legend_w
    plot_h = height - 2 * margin
    px = margin + (z[:, 0] - lo[0]) / span[0] * plot_w
    py = height - margin - (z[:, 1] - lo[1]) / span[1] * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{margin}" y="{margin - 20}" font-size="14">{escape(title)}</text>',
        f'<rect x="{margin}" y="{margin}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>',
        f'<text x="{margin + plot_w / 2:.1f}" y="{height - 15}" text-anchor="middle">'
        "latent-1 (arbitrary units)</text>",
        f'<text x="15" y="{margin + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {margin + plot_h / 2:.1f})">latent-2 (arbitrary units)</text>',
    ]
    for i in range(emb.n):
        condition = emb.conditions[i] if emb.conditions is not None else None
        session = emb.sessions[i] if emb.sessions is not None else "M1"
        parts.append(_marker(session, px[i], py[i], PALETTE.get(condition, "#333333")))

    lx = width - legend_w - margin / 2 + 10
    ly = margin + 10
    present = [c for c in CONDITIONS if emb.conditions is not None and c in set(emb.conditions)]
    for c in present:
        parts.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{PALETTE[c]}"/>')
        parts.append(f'<text x="{lx + 16}" y="{ly}">{escape(c)}</text>')
        ly += 18
    ly += 8
    sessions = [s for s in SESSIONS if emb.sessions is not None and s in set(emb.sessions)]
    for s in sessions:
        parts.append(_marker(s, lx + 5, ly - 4, "#333333"))
        parts.append(f'<text x="{lx + 16}" y="{ly}">{s}</text>')
        ly += 18
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- markdown summary -----------------------------------------------------


def report_markdown(
    *,
    source: str,
    n_rows: int,
    audit: dict,
    summaries: Sequence[ScoreSummary],
    deltas: Sequence[DeltaRecord],
    raw_mode: bool,
    dynamics: Sequence[CellDynamics],
    embeddings: Sequence[EmbeddingResult],
    trust: dict[str, float],
    dissociation: Sequence[DissociationReport],
    stability: StabilityReport | None,
) -> str:
    lines = ["# Multi-level gait analysis report", ""]
    lines += [
        f"- Input: `{source}`",
        f"- Linear-phase observations: {n_rows}",
        f"- Outlier replacements (IQR factor {audit['iqr_factor']}): "
        + ", ".join(f"{k}={v}" for k, v in audit["replaced"].items()),
        f"- Normalization scope: {audit['scope']}",
        "",
        "## Level 1: composite score",
        "",
        f"GPPS computed on {'raw' if raw_mode else 'preprocessed (min-max normalized)'} features.",
        "",
        "| Condition | Session | n | Mean ± SD | Median [Q1–Q3] |",
        "|---|---|---|---|---|",
    ]
    for s in summaries:
        lines.append(
            f"| {s.condition} | {s.session} | {s.n} | {fmt(s.mean, 2)} ± {fmt(s.sd, 2)} | "
            f"{fmt(s.median, 2)} [{fmt(s.q1, 2)}–{fmt(s.q3, 2)}] |"
        )
    if deltas:
        lines += ["", "| Condition | M1 mean | M2 mean | Δ (%) |", "|---|---|---|---|"]
        for d in deltas:
            lines.append(
                f"| {d.condition} | {fmt(d.gpps_m1_mean, 2)} | {fmt(d.gpps_m2_mean, 2)} | {fmt(d.delta_percent, 2)} |"
            )

    lines += [
        "",
        "## Level 2: trajectory dispersion",
        "",
        "| Condition | Session | n | Mean pairwise | RMS to centroid | Path length |",
        "|---|---|---|---|---|---|",
    ]
    for c in dynamics:
        s = c.stats
        lines.append(
            f"| {c.condition} | {c.session} | {s.n_points} | {fmt(s.mean_pairwise_dist, 4)} | "
            f"{fmt(s.rms_centroid_dist, 4)} | {fmt(s.path_length, 4)} |"
        )

    lines += ["", "## Level 3: latent representation", ""]
    lines.append("Axes are latent-1/latent-2 in arbitrary units; distances have no physical meaning.")
    lines.append("")
    for emb in embeddings:
        sess = ",".join(s for s in SESSIONS if s in set(emb.sessions))
        p = emb.params
        lines.append(
            f"- Session(s) {sess}: n={emb.n}, n_neighbors={p.n_neighbors}, min_dist={p.min_dist}, "
            f"epochs={p.epochs}, negative_samples={p.negative_samples}, init={emb.init_used}, "
            f"seed={emb.seed}, a={fmt(emb.a, 4)}, b={fmt(emb.b, 4)}, "
            f"trustworthiness={fmt(trust.get(sess, float('nan')), 4)}"
        )

    lines += ["", "## Score-similar, latent-separated pairs", ""]
    for rep in dissociation:
        t = rep.thresholds
        lines.append(
            f"Session {rep.session} (score gap <= {t.score_factor} x pooled SD with IQR overlap; "
            f"standardized separation >= {t.tau_sep}; silhouette >= {t.tau_sil}):"
        )
        lines.append("")
        flagged = rep.flagged
        if not flagged:
            lines.append("- no pair meets both criteria")
        for p in flagged:
            lines.append(
                f"- {p.cond_i} / {p.cond_j}: GPPS gap {fmt(p.gpps_gap, 2)}, "
                f"standardized separation {fmt(p.separation.standardized_sep, 4)}, "
                f"silhouette {fmt(p.separation.silhouette, 4)}"
            )
        lines.append("")
    lines.append(
        "A flagged pair means the aggregate score does not distinguish conditions that the "
        "embedding places apart. This is descriptive only and implies no causal relation."
    )

    if stability is not None:
        lines += [
            "",
            "## Embedding stability",
            "",
            f"- Seeds: {', '.join(str(s) for s in stability.seeds)}",
            f"- Mean ARI (k-means, k={stability.n_clusters}): {fmt(stability.mean_ari, 4)}",
            f"- Mean Procrustes disparity: {fmt(stability.mean_disparity, 4)}",
        ]
    return "\n".join(lines) + "\n"
