"""Outlier replacement (IQR fences, median substitution) and min-max scaling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyColumn
from .ingest import FEATURES, GaitDataset, filter_linear_phases


def quantile(values, q: float) -> float:
    """Quantile of sorted data at position q*(n-1), linear interpolation between neighbours."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise EmptyColumn("quantile of an empty column")
    pos = q * (x.size - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, x.size - 1)
    frac = pos - lo
    return float(x[lo] + frac * (x[hi] - x[lo]))


@dataclass(frozen=True)
class FeatureMatrix:
    """N x 9 numeric table, row-aligned with (obs_id, session, condition)."""

    values: np.ndarray
    obs_ids: np.ndarray
    sessions: np.ndarray
    conditions: np.ndarray
    columns: tuple[str, ...] = FEATURES

    def __post_init__(self):
        n = self.values.shape[0]
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError(f"values must be N x {len(self.columns)}, got {self.values.shape}")
        if not (len(self.obs_ids) == len(self.sessions) == len(self.conditions) == n):
            raise ValueError("label arrays must match the number of rows")

    @classmethod
    def from_dataset(cls, ds: GaitDataset) -> "FeatureMatrix":
        return cls(ds.feature_array(), ds.obs_ids, ds.sessions, ds.conditions)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def subset(self, mask) -> "FeatureMatrix":
        mask = np.asarray(mask)
        return FeatureMatrix(
            self.values[mask], self.obs_ids[mask], self.sessions[mask], self.conditions[mask], self.columns
        )

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(values, self.obs_ids, self.sessions, self.conditions, self.columns)


@dataclass(frozen=True)
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray
    scope: str = "global"

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        span = self.maxs - self.mins
        out = np.zeros_like(m.values, dtype=np.float64)
        nonconst = span > 0
        out[:, nonconst] = (m.values[:, nonconst] - self.mins[nonconst]) / span[nonconst]
        return m.with_values(out)


@dataclass(frozen=True)
class PreprocessConfig:
    iqr_factor: float = 1.5
    scope: str = "global"

    def __post_init__(self):
        if not self.iqr_factor > 0:
            raise ConfigError(f"iqr.factor must be > 0, got {self.iqr_factor}")
        if self.scope != "global":
            raise ConfigError(f"normalize.scope supports only 'global', got {self.scope!r}")


@dataclass
class AuditLog:
    iqr_factor: float
    scope: str
    replaced: dict[str, int] = field(default_factory=dict)
    fences: dict[str, tuple[float, float]] = field(default_factory=dict)
    medians: dict[str, float] = field(default_factory=dict)

    @property
    def total_replaced(self) -> int:
        return sum(self.replaced.values())

    def as_dict(self) -> dict:
        return {
            "iqr_factor": self.iqr_factor,
            "scope": self.scope,
            "replaced": dict(self.replaced),
            "fences": {k: [lo, hi] for k, (lo, hi) in self.fences.items()},
            "medians": dict(self.medians),
        }


def iqr_fences(col, factor: float = 1.5) -> tuple[float, float, float]:
    """Return (lower fence, upper fence, median) of a column."""
    q1, med, q3 = quantile(col, 0.25), quantile(col, 0.5), quantile(col, 0.75)
    iqr = q3 - q1
    return q1 - factor * iqr, q3 + factor * iqr, med


def iqr_replace_column(col, factor: float = 1.5) -> tuple[np.ndarray, int]:
    """Replace values outside the Tukey fences with the column median.

    Quartiles and median both come from the original column, so the
    replacement does not feed back into the fences.
    """
    x = np.asarray(col, dtype=np.float64)
    if x.size == 0:
        raise EmptyColumn("cannot apply IQR replacement to an empty column")
    if not factor > 0:
        raise ValueError(f"factor must be > 0, got {factor}")
    lo, hi, med = iqr_fences(x, factor)
    outside = (x < lo) | (x > hi)
    out = x.copy()
    out[outside] = med
    return out, int(outside.sum())


def fit_minmax(m: FeatureMatrix, scope: str = "global") -> ScalerParams:
    if scope != "global":
        raise ConfigError(f"unsupported normalization scope {scope!r}")
    return ScalerParams(m.values.min(axis=0), m.values.max(axis=0), scope)


def minmax_normalize(m: FeatureMatrix, scope: str = "global") -> tuple[FeatureMatrix, ScalerParams]:
    """Map each column to [0, 1]; constant columns become all zeros."""
    params = fit_minmax(m, scope)
    return params.apply(m), params


def preprocess_pipeline(ds: GaitDataset, cfg: PreprocessConfig | None = None):
    """IQR replacement per column, then global min-max normalization.

    Returns (normalized FeatureMatrix, ScalerParams, AuditLog).
    """
    cfg = cfg or PreprocessConfig()
    ds = filter_linear_phases(ds)
    raw = FeatureMatrix.from_dataset(ds)
    audit = AuditLog(cfg.iqr_factor, cfg.scope)
    cleaned = np.empty_like(raw.values)
    for j, name in enumerate(raw.columns):
        lo, hi, med = iqr_fences(raw.values[:, j], cfg.iqr_factor)
        cleaned[:, j], audit.replaced[name] = iqr_replace_column(raw.values[:, j], cfg.iqr_factor)
        audit.fences[name] = (lo, hi)
        audit.medians[name] = med
    normalized, params = minmax_normalize(raw.with_values(cleaned), cfg.scope)
    return normalized, params, audit
