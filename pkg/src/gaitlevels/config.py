"""Run configuration and the flat ``section.key = value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .dissociation import Thresholds
from .embedding import EmbeddingParams
from .errors import ConfigError
from .preprocess import PreprocessConfig


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(" ", "").split(",") if p)


# key -> (attribute on RunConfig, parser)
KEYS = {
    "iqr.factor": ("iqr_factor", float),
    "normalize.scope": ("normalize_scope", str),
    "level1.raw_scores": ("raw_scores", _bool),
    "umap.n_neighbors": ("n_neighbors", int),
    "umap.min_dist": ("min_dist", float),
    "umap.spread": ("spread", float),
    "umap.n_components": ("n_components", int),
    "umap.epochs": ("epochs", int),
    "umap.negative_samples": ("negative_samples", int),
    "umap.init": ("init", str),
    "umap.parallel": ("parallel", _bool),
    "seed": ("seed", int),
    "dissociation.score_factor": ("score_factor", float),
    "dissociation.tau_sep": ("tau_sep", float),
    "dissociation.tau_sil": ("tau_sil", float),
    "stability.seeds": ("seeds", _int_list),
    "stability.kmeans_seed": ("kmeans_seed", int),
    "diagnostics.trust_k": ("trust_k", int),
}


@dataclass(frozen=True)
class RunConfig:
    iqr_factor: float = 1.5
    normalize_scope: str = "global"
    raw_scores: bool = False
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_components: int = 2
    epochs: int = 500
    negative_samples: int = 5
    init: str = "spectral"
    parallel: bool = False
    seed: int = 42
    score_factor: float = 0.5
    tau_sep: float = 2.0
    tau_sil: float = 0.25
    seeds: tuple[int, ...] = field(default=(1, 2, 3, 4, 5))
    kmeans_seed: int = 0
    trust_k: int = 15

    def __post_init__(self):
        # surface invalid values early, with config-key names in the message
        self.preprocess
        self.embedding

    @property
    def preprocess(self) -> PreprocessConfig:
        return PreprocessConfig(self.iqr_factor, self.normalize_scope)

    @property
    def embedding(self) -> EmbeddingParams:
        return EmbeddingParams(
            n_neighbors=self.n_neighbors,
            min_dist=self.min_dist,
            spread=self.spread,
            n_components=self.n_components,
            epochs=self.epochs,
            negative_samples=self.negative_samples,
            init=self.init,
            parallel=self.parallel,
        )

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.score_factor, self.tau_sep, self.tau_sil)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def as_keys(self) -> dict[str, object]:
        """Flat key -> value view, in KEYS order (what the manifest records)."""
        out = {}
        for key, (attr, _) in KEYS.items():
            value = getattr(self, attr)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    changes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}; known keys: {', '.join(KEYS)}")
        attr, parse = KEYS[key]
        try:
            changes[attr] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return (base or RunConfig()).replace(**changes)


def load_config(path: str | Path | None, base: RunConfig | None = None) -> RunConfig:
    if path is None:
        return base or RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), base)


def from_keys(keys: dict[str, object]) -> RunConfig:
    changes = {}
    for key, value in keys.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        attr, _ = KEYS[key]
        changes[attr] = tuple(value) if isinstance(value, list) else value
    return RunConfig().replace(**changes)
