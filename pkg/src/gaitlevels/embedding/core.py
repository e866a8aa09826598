from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, KTooLarge, NonFinite
from ..preprocess import FeatureMatrix
from .curve import fit_ab
from .graph import calibrate_graph, fuzzy_graph, knn_graph
from .layout import optimize_layout
from .spectral import SpectralFailure, spectral_init

log = logging.getLogger(__name__)

INIT_MODES = ("spectral", "random")


@dataclass(frozen=True)
class EmbeddingParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_components: int = 2
    epochs: int = 500
    negative_samples: int = 5
    init: str = "spectral"
    learning_rate: float = 1.0
    repulsion_strength: float = 1.0
    metric: str = "euclidean"
    parallel: bool = False

    def __post_init__(self):
        if self.init not in INIT_MODES:
            raise ConfigError(f"umap.init must be one of {INIT_MODES}, got {self.init!r}")
        if self.n_neighbors < 1:
            raise ConfigError("umap.n_neighbors must be >= 1")
        if self.epochs < 1:
            raise ConfigError("umap.epochs must be >= 1")
        if self.negative_samples < 1:
            raise ConfigError("umap.negative_samples must be >= 1")
        if self.n_components < 1:
            raise ConfigError("n_components must be >= 1")


@dataclass(frozen=True)
class EmbeddingResult:
    z: np.ndarray
    params: EmbeddingParams
    seed: int
    a: float
    b: float
    init_used: str
    mode: str
    obs_ids: np.ndarray | None = None
    sessions: np.ndarray | None = None
    conditions: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def describe(self) -> dict:
        return {
            "params": asdict(self.params),
            "seed": self.seed,
            "a": self.a,
            "b": self.b,
            "init_used": self.init_used,
            "mode": self.mode,
            "n": self.n,
        }


def _rescale(z: np.ndarray) -> np.ndarray:
    lo, hi = z.min(axis=0), z.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return 10.0 * (z - lo) / span


def embed(m, params: EmbeddingParams | None = None, seed: int = 0) -> EmbeddingResult:
    """Embed the rows of a feature matrix (or plain array) into params.n_components dims."""
    params = params or EmbeddingParams()
    if isinstance(m, FeatureMatrix):
        x, labels = m.values, (m.obs_ids, m.sessions, m.conditions)
    else:
        x, labels = np.asarray(m, dtype=np.float64), (None, None, None)
    n = x.shape[0]
    if n < params.n_neighbors + 1:
        raise KTooLarge(f"embedding needs N >= n_neighbors + 1 ({params.n_neighbors + 1}), got {n}")

    rng = np.random.default_rng(seed)
    graph = knn_graph(x, params.n_neighbors, params.metric)
    fg = fuzzy_graph(graph, calibrate_graph(graph))
    a, b = fit_ab(params.min_dist, params.spread)

    init_used = params.init
    z0 = None
    if params.init == "spectral":
        try:
            z0 = spectral_init(fg.weights, params.n_components, x, rng)
            expansion = 10.0 / np.abs(z0).max()
            z0 = z0 * expansion + rng.normal(scale=1e-4, size=z0.shape)
        except SpectralFailure as exc:
            log.warning("spectral initialisation failed (%s); using random init", exc)
            init_used = "random-fallback"
    if z0 is None:
        z0 = rng.uniform(-10.0, 10.0, size=(n, params.n_components))

    z = optimize_layout(
        _rescale(z0),
        fg,
        a,
        b,
        params.epochs,
        rng,
        negative_samples=params.negative_samples,
        learning_rate=params.learning_rate,
        repulsion_strength=params.repulsion_strength,
        parallel=params.parallel,
    )
    if not np.all(np.isfinite(z)):
        raise NonFinite("layout produced non-finite coordinates")
    return EmbeddingResult(
        z=z,
        params=params,
        seed=seed,
        a=a,
        b=b,
        init_used=init_used,
        mode="parallel" if params.parallel else "sequential",
        obs_ids=labels[0],
        sessions=labels[1],
        conditions=labels[2],
    )
