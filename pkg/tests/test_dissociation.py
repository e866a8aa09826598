import itertools
from math import comb

import numpy as np
import pytest
from scipy.spatial import procrustes as scipy_procrustes
from scipy.stats import ortho_group
from sklearn.manifold import trustworthiness as sklearn_trustworthiness
from sklearn.metrics import adjusted_rand_score

from gaitlevels.dissociation import (
    Thresholds,
    detect_dissociation,
    latent_separated,
    pooled_sd,
    procrustes_disparity,
    score_similarity,
    separation_stats,
    stability_assess,
    trustworthiness,
)
from gaitlevels.embedding import EmbeddingParams, EmbeddingResult
from gaitlevels.errors import KTooLarge, MissingCondition, SessionMismatch, ShapeMismatch
from gaitlevels.level1 import ScoreSummary


def summary(cond, mean, sd=1.4, n=50, session="M1", half_iqr=0.9):
    return ScoreSummary(cond, session, n, mean, sd, mean, mean - half_iqr, mean + half_iqr)


def blob(center, n=60, scale=0.3, seed=0):
    return np.asarray(center) + scale * np.random.default_rng(seed).standard_normal((n, 2))


def fake_embedding(groups, session="M1"):
    z = np.vstack([pts for _, pts in groups])
    conds = np.concatenate([[c] * len(pts) for c, pts in groups]).astype(object)
    sessions = np.array([session] * len(z), dtype=object)
    return EmbeddingResult(z, EmbeddingParams(), 0, 1.0, 1.0, "spectral", "sequential", np.arange(len(z)), sessions, conds)


# --- procrustes -------------------------------------------------------------


def test_procrustes_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
        assert procrustes_disparity(a, b) == pytest.approx(scipy_procrustes(a, b)[2], abs=1e-12)


def test_procrustes_invariances():
    a = np.random.default_rng(1).normal(size=(50, 2))
    assert procrustes_disparity(a, a) == pytest.approx(0.0, abs=1e-14)
    rot = ortho_group.rvs(2, random_state=4)
    assert procrustes_disparity(a, 3.7 * a @ rot + 5.0) < 1e-10
    assert procrustes_disparity(a, -a) < 1e-10  # reflections are allowed


def test_procrustes_random_cloud_mostly_large():
    rng = np.random.default_rng(2)
    vals = [procrustes_disparity(rng.normal(size=(100, 2)), rng.normal(size=(100, 2))) for _ in range(20)]
    assert np.mean(vals) > 0.5
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_procrustes_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        procrustes_disparity(np.zeros((5, 2)), np.zeros((6, 2)))


# --- trustworthiness ----------------------------------------------------------


@pytest.mark.parametrize("k", [1, 5, 12])
def test_trustworthiness_matches_sklearn(k):
    rng = np.random.default_rng(k)
    x = rng.normal(size=(60, 6))
    z = x[:, :2] + 0.3 * rng.normal(size=(60, 2))
    assert trustworthiness(x, z, k) == pytest.approx(sklearn_trustworthiness(x, z, n_neighbors=k), abs=1e-12)


def test_trustworthiness_identity_and_shuffle():
    x = np.random.default_rng(3).normal(size=(80, 2))
    assert trustworthiness(x, x, 10) == pytest.approx(1.0)
    shuffled = x[np.random.default_rng(4).permutation(80)]
    assert trustworthiness(x, shuffled, 10) < 0.7


def test_trustworthiness_bad_k():
    with pytest.raises(KTooLarge):
        trustworthiness(np.zeros((10, 2)), np.zeros((10, 2)), 5)


# --- predicates -------------------------------------------------------------


def test_pooled_sd_equal_groups():
    assert pooled_sd(summary("ONL", 8.0, sd=1.2), summary("OSL", 8.0, sd=1.6)) == pytest.approx(np.sqrt((1.44 + 2.56) / 2))


def test_separation_stats_symmetric():
    zi, zj = blob([0, 0], seed=1), blob([3, 0], seed=2)
    s1 = separation_stats(zi, zj, "OC3", "OC2.5")
    s2 = separation_stats(zj, zi, "OC2.5", "OC3")
    assert s1 == s2
    assert (s1.cond_i, s1.cond_j) == ("OC2.5", "OC3")


@pytest.mark.parametrize(
    "gap,offset,expected",
    [
        (0.1, 5.0, (True, True)),
        (0.1, 0.0, (True, False)),
        (2.1, 5.0, (False, True)),
        (2.1, 0.0, (False, False)),
    ],
)
def test_flag_requires_both_predicates(gap, offset, expected):
    summaries = [summary("OC2.5", 9.0), summary("OC3", 9.0 - gap)]
    emb = fake_embedding([("OC2.5", blob([0, 0], seed=1)), ("OC3", blob([offset, 0], seed=2))])
    (pair,) = detect_dissociation(summaries, emb).pairs
    assert (pair.score_similar, pair.latent_separated) == expected
    assert pair.flagged == all(expected)


def test_large_score_gap_never_flagged():
    a, b = summary("ONL", 8.3, sd=1.4), summary("OBL", 6.2, sd=1.4)
    *_, similar = score_similarity(a, b)
    assert not similar
    emb = fake_embedding([("ONL", blob([0, 0], seed=1)), ("OBL", blob([50, 50], seed=2))])
    rep = detect_dissociation([a, b], emb)
    assert rep.pairs[0].latent_separated and not rep.flagged


def test_non_overlapping_iqr_blocks_similarity():
    a = summary("ONL", 8.0, sd=4.0, half_iqr=0.1)
    b = summary("OSL", 8.5, sd=4.0, half_iqr=0.1)
    gap, _, tau, overlap, similar = score_similarity(a, b)
    assert gap <= tau and not overlap and not similar


def test_thresholds_are_configurable():
    sep = separation_stats(blob([0, 0], seed=1), blob([1.0, 0], seed=2))
    assert latent_separated(sep, Thresholds(tau_sep=0.5, tau_sil=0.0))
    assert not latent_separated(sep, Thresholds(tau_sep=50.0))


def test_session_mismatch():
    emb = fake_embedding([("ONL", blob([0, 0])), ("OSL", blob([1, 1]))], session="M2")
    with pytest.raises(SessionMismatch):
        detect_dissociation([summary("ONL", 8), summary("OSL", 8)], emb)
    with pytest.raises(SessionMismatch):
        detect_dissociation([summary("ONL", 8), summary("OSL", 8, session="M2")], emb)


def test_missing_condition():
    emb = fake_embedding([("ONL", blob([0, 0])), ("OSL", blob([1, 1]))])
    with pytest.raises(MissingCondition):
        detect_dissociation([summary("ONL", 8), summary("OSL", 8), summary("OBL", 6)], emb)
    with pytest.raises(MissingCondition):
        detect_dissociation([summary("ONL", 8)], emb)


# --- stability ----------------------------------------------------------------


def ari_by_pair_counting(a, b):
    """Brute-force pair-counting oracle."""
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    both = sum(1 for i, j in pairs if a[i] == a[j] and b[i] == b[j])
    in_a = sum(1 for i, j in pairs if a[i] == a[j])
    in_b = sum(1 for i, j in pairs if b[i] == b[j])
    expected = in_a * in_b / comb(n, 2)
    maximum = (in_a + in_b) / 2
    return 1.0 if maximum == expected else (both - expected) / (maximum - expected)


def test_ari_against_pair_counting():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = rng.integers(0, 3, 40), rng.integers(0, 4, 40)
        assert adjusted_rand_score(a, b) == pytest.approx(ari_by_pair_counting(a, b), abs=1e-12)
    a = rng.integers(0, 3, 40)
    assert ari_by_pair_counting(a, (a + 1) % 3) == pytest.approx(1.0)


def test_stability_identical_seeds(clusters):
    x, _ = clusters
    rep = stability_assess(x[:150], EmbeddingParams(epochs=100), seeds=[42, 42], n_clusters=3)
    assert rep.mean_ari == 1.0
    assert rep.mean_disparity == pytest.approx(0.0, abs=1e-12)


def test_stability_disparity_symmetric(clusters):
    x, _ = clusters
    rep = stability_assess(x, EmbeddingParams(epochs=100), seeds=[1, 2], n_clusters=3)
    pair = rep.per_pair[0]
    assert pair["disparity_ab"] == pytest.approx(pair["disparity_ba"], abs=1e-12)
    assert -1.0 <= pair["ari"] <= 1.0


def test_stability_needs_two_seeds(clusters):
    with pytest.raises(ValueError):
        stability_assess(clusters[0], seeds=[1], n_clusters=3)
