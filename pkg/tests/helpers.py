"""Fixture builders shared by the test modules."""

import numpy as np

from gaitlevels.ingest import COLUMNS


def make_row(obs_id, session="M1", condition="ONL", phase="linear", **features):
    values = dict(v=1.0, c=100.0, D=0.6, A=0.05, A_P=0.04, A_L=0.05, L=0.55, CoP=0.3, CAPA=0.7)
    values.update(features)
    return {"obs_id": obs_id, "session": session, "condition": condition, "phase": phase, **values}


def rows_to_csv(rows, columns=COLUMNS):
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(str(r[c]) for c in columns))
    return ("\n".join(lines) + "\n").encode("utf-8")


def three_clusters(seed=1, n_per=100, dim=9, sep=10.0):
    """Isotropic unit-variance blobs whose centres are pairwise `sep` apart."""
    rng = np.random.default_rng(seed)
    centers = np.zeros((3, dim))
    for k in range(3):
        centers[k, k] = sep / np.sqrt(2.0)
    labels = np.repeat(np.arange(3), n_per)
    return centers[labels] + rng.standard_normal((3 * n_per, dim)), labels

