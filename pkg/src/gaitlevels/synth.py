"""Seeded synthetic gait datasets.

Everything here is synthetic. The Table-1 generator only matches the
published GPPS cell means and SDs; feature-level structure is invented.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .ingest import CONDITIONS, FEATURES, SESSIONS, GaitDataset, GaitObservation
from .level1 import GPPS_WEIGHTS

CAPA = FEATURES.index("CAPA")

# Published GPPS summaries: condition -> ((M1 mean, M1 sd), (M2 mean, M2 sd)).
TABLE1_GPPS = {
    "ONL": ((8.3, 1.5), (8.5, 1.4)),
    "OSL": ((7.9, 1.3), (7.9, 1.2)),
    "OBL": ((6.2, 1.6), (6.5, 1.5)),
    "OC2.5": ((9.1, 1.2), (9.4, 1.2)),
    "OC3": ((8.8, 1.3), (9.1, 1.2)),
    "OC3P": ((7.5, 1.4), (7.8, 1.3)),
}
TABLE1_DELTA = {"ONL": 2.41, "OSL": 0.00, "OBL": 4.84, "OC2.5": 3.30, "OC3": 3.41, "OC3P": 4.00}

# Plausible stride-level values for an older adult; only used as a base for synthetic draws.
BASE_MEAN = np.array([0.9, 100.0, 0.6, 0.05, 0.04, 0.05, 0.55, 0.0, 0.0])
BASE_SD = np.array([0.08, 4.0, 0.03, 0.01, 0.01, 0.01, 0.04, 0.2, 0.0])

_NONNEG = np.array([f in ("v", "c", "A", "A_P", "A_L", "L") for f in FEATURES])
_POSITIVE = np.array([f == "D" for f in FEATURES])
_MIN_STEP_TIME = 1e-3


@dataclass(frozen=True)
class CellSpec:
    condition: str
    session: str
    mean: tuple[float, ...]
    sd: tuple[float, ...]
    n: int
    target_mean: float | None = None
    target_sd: float | None = None


@dataclass(frozen=True)
class GeneratorSpec:
    cells: tuple[CellSpec, ...]
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "cells": [
                    {
                        "condition": c.condition,
                        "session": c.session,
                        "mean": list(c.mean),
                        "sd": list(c.sd),
                        "n": c.n,
                        "target_mean": c.target_mean,
                        "target_sd": c.target_sd,
                    }
                    for c in self.cells
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GeneratorSpec":
        try:
            raw = json.loads(text)
            cells = tuple(
                CellSpec(
                    condition=c["condition"],
                    session=c["session"],
                    mean=tuple(float(v) for v in c["mean"]),
                    sd=tuple(float(v) for v in c["sd"]),
                    n=int(c["n"]),
                    target_mean=c.get("target_mean"),
                    target_sd=c.get("target_sd"),
                )
                for c in raw["cells"]
            )
            return cls(cells, int(raw.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"malformed generator spec: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorSpec":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def validate_spec(spec: GeneratorSpec) -> None:
    if not spec.cells:
        raise InvalidSpec("spec has no cells")
    seen = set()
    for c in spec.cells:
        where = f"cell {c.condition}/{c.session}"
        if c.condition not in CONDITIONS or c.session not in SESSIONS:
            raise InvalidSpec(f"{where}: unknown label")
        if (c.condition, c.session) in seen:
            raise InvalidSpec(f"{where}: duplicated")
        seen.add((c.condition, c.session))
        if len(c.mean) != len(FEATURES) or len(c.sd) != len(FEATURES):
            raise InvalidSpec(f"{where}: mean and sd need {len(FEATURES)} entries")
        if not (np.all(np.isfinite(c.mean)) and np.all(np.isfinite(c.sd))):
            raise InvalidSpec(f"{where}: non-finite moments")
        if min(c.sd) < 0:
            raise InvalidSpec(f"{where}: negative standard deviation")
        if c.n < 1:
            raise InvalidSpec(f"{where}: n must be >= 1")
        if (c.target_mean is None) != (c.target_sd is None):
            raise InvalidSpec(f"{where}: give both target_mean and target_sd or neither")
        if c.target_sd is not None and not (np.isfinite(c.target_sd) and c.target_sd >= 0):
            raise InvalidSpec(f"{where}: target_sd must be finite and >= 0")
        if c.target_mean is not None and not np.isfinite(c.target_mean):
            raise InvalidSpec(f"{where}: target_mean must be finite")


def calibrated_moments(cell: CellSpec) -> tuple[np.ndarray, np.ndarray]:
    """Feature means/SDs whose GPPS has the cell's target mean and SD.

    CAPA enters GPPS with weight 1, so it absorbs the mean correction and the
    variance not already contributed by the other features. If those exceed
    the target variance they are scaled down and CAPA gets none.
    """
    mean = np.array(cell.mean, dtype=np.float64)
    sd = np.array(cell.sd, dtype=np.float64)
    if cell.target_mean is None:
        return mean, sd
    w = GPPS_WEIGHTS
    other = np.arange(len(FEATURES)) != CAPA
    mean[CAPA] = cell.target_mean - float(w[other] @ mean[other])
    var_other = float(np.sum((w[other] * sd[other]) ** 2))
    target_var = cell.target_sd**2
    if var_other <= target_var:
        sd[CAPA] = np.sqrt(target_var - var_other)
    else:
        sd[other] *= np.sqrt(target_var / var_other)
        sd[CAPA] = 0.0
    return mean, sd


def _clamp_to_schema(x: np.ndarray) -> np.ndarray:
    x[:, _NONNEG] = np.maximum(x[:, _NONNEG], 0.0)
    x[:, _POSITIVE] = np.maximum(x[:, _POSITIVE], _MIN_STEP_TIME)
    return x


def _to_dataset(blocks, provenance: str) -> GaitDataset:
    obs = []
    next_id = 1
    for condition, session, values in blocks:
        for row in values:
            obs.append(
                GaitObservation(next_id, session, condition, "linear", *(float(v) for v in row))
            )
            next_id += 1
    return GaitDataset(tuple(obs), provenance)


def generate_calibrated(spec: GeneratorSpec) -> GaitDataset:
    """Independent Gaussian features per cell, moments set by calibrated_moments.

    Nonnegative features are clamped at 0 (step time at 1 ms) so output always
    passes ingest validation; with the default scales the clamp never binds.
    """
    validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    blocks = []
    for cell in spec.cells:
        mean, sd = calibrated_moments(cell)
        values = mean + sd * rng.standard_normal((cell.n, len(FEATURES)))
        blocks.append((cell.condition, cell.session, _clamp_to_schema(values)))
    return _to_dataset(blocks, f"synthetic:calibrated(seed={spec.seed})")


def table1_spec(n: int = 500, seed: int = 3) -> GeneratorSpec:
    cells = []
    for condition in CONDITIONS:
        for session, (target_mean, target_sd) in zip(SESSIONS, TABLE1_GPPS[condition]):
            cells.append(
                CellSpec(condition, session, tuple(BASE_MEAN), tuple(BASE_SD), n, target_mean, target_sd)
            )
    return GeneratorSpec(tuple(cells), seed)


# Dissociation scenario: two conditions differ only along a GPPS-neutral direction.
SCENARIO_PAIR = ("OC2.5", "OC3")
SCENARIO_CONTROL = "OBL"
_SCENARIO_MEAN = np.array([1.0, 100.0, 0.6, 0.15, 0.15, 0.05, 0.6, 0.5, 1.0])
_SCENARIO_SD = np.array([0.03, 1.5, 0.02, 0.01, 0.01, 0.005, 0.02, 0.05, 0.05])
_CONTROL_SHIFT = np.array([-0.2, -10.0, 0.1, 0.0, 0.0, 0.03, -0.1, -0.2, -0.3])
_NEUTRAL_STEP = 0.1


def neutral_offset(step: float = _NEUTRAL_STEP) -> np.ndarray:
    """Raise temporal asymmetry and lower single-support asymmetry by the same amount.

    Both carry weight -0.10, so the offset is orthogonal to the GPPS weights.
    """
    delta = np.zeros(len(FEATURES))
    delta[FEATURES.index("A")] = step
    delta[FEATURES.index("A_P")] = -step
    return delta


def dissociation_scenario(seed: int = 7, n: int = 300) -> GaitDataset:
    """One session; OC2.5 and OC3 share GPPS but sit on opposite sides of the
    neutral offset, OBL is a lower-GPPS control."""
    rng = np.random.default_rng(seed)
    delta = neutral_offset()
    means = {
        SCENARIO_PAIR[0]: _SCENARIO_MEAN + delta,
        SCENARIO_PAIR[1]: _SCENARIO_MEAN - delta,
        SCENARIO_CONTROL: _SCENARIO_MEAN + _CONTROL_SHIFT,
    }
    blocks = []
    for condition in (SCENARIO_CONTROL,) + SCENARIO_PAIR:
        values = means[condition] + _SCENARIO_SD * rng.standard_normal((n, len(FEATURES)))
        blocks.append((condition, "M1", _clamp_to_schema(values)))
    return _to_dataset(blocks, f"synthetic:dissociation(seed={seed})")


def iid_scenario(seed: int = 0, n: int = 150, conditions=("ONL", "OSL")) -> GaitDataset:
    """Negative control: every condition drawn from the same distribution."""
    rng = np.random.default_rng(seed)
    blocks = []
    for condition in conditions:
        values = _SCENARIO_MEAN + _SCENARIO_SD * rng.standard_normal((n, len(FEATURES)))
        blocks.append((condition, "M1", _clamp_to_schema(values)))
    return _to_dataset(blocks, f"synthetic:iid(seed={seed})")


def point_mass_table1(n: int = 3) -> GaitDataset:
    """Every cell is n copies of one observation whose raw GPPS equals the Table-1 mean."""
    blocks = []
    other = np.arange(len(FEATURES)) != CAPA
    for condition in CONDITIONS:
        for session, (target_mean, _) in zip(SESSIONS, TABLE1_GPPS[condition]):
            row = BASE_MEAN.copy()
            row[CAPA] = target_mean - float(GPPS_WEIGHTS[other] @ row[other])
            blocks.append((condition, session, np.tile(row, (n, 1))))
    return _to_dataset(blocks, "synthetic:table1-point-mass")
