"""Parsing, validation and phase filtering of stride-level gait CSV files.

Expected header (any column order)::

    obs_id, session, condition, phase, v, c, D, A, A_P, A_L, L, CoP, CAPA

CoP and CAPA are taken as precomputed dimensionless scalars.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .errors import (
    BadLabel,
    DuplicateId,
    EmptyAfterFilter,
    EmptyFile,
    MissingColumn,
    NonNumeric,
)

CONDITIONS = ("ONL", "OSL", "OBL", "OC2.5", "OC3", "OC3P")
SESSIONS = ("M1", "M2")
PHASES = ("linear", "turn")

# State vector order; every matrix in the package uses it.
FEATURES = ("v", "c", "D", "A", "A_P", "A_L", "L", "CoP", "CAPA")
COLUMNS = ("obs_id", "session", "condition", "phase") + FEATURES

# Lower bounds per feature: (bound, strict).
_BOUNDS = {
    "v": (0.0, False),
    "c": (0.0, False),
    "D": (0.0, True),
    "A": (0.0, False),
    "A_P": (0.0, False),
    "A_L": (0.0, False),
    "L": (0.0, False),
}


def parse_condition(value: str, row: int = 0) -> str:
    if value not in CONDITIONS:
        raise BadLabel(row, "condition", value, CONDITIONS)
    return value


def parse_session(value: str, row: int = 0) -> str:
    if value not in SESSIONS:
        raise BadLabel(row, "session", value, SESSIONS)
    return value


@dataclass(frozen=True)
class GaitObservation:
    obs_id: int
    session: str
    condition: str
    phase: str
    v: float
    c: float
    D: float
    A: float
    A_P: float
    A_L: float
    L: float
    CoP: float
    CAPA: float

    def features(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURES)


@dataclass(frozen=True)
class GaitDataset:
    observations: tuple[GaitObservation, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    @property
    def obs_ids(self) -> np.ndarray:
        return np.array([o.obs_id for o in self.observations], dtype=np.int64)

    @property
    def sessions(self) -> np.ndarray:
        return np.array([o.session for o in self.observations], dtype=object)

    @property
    def conditions(self) -> np.ndarray:
        return np.array([o.condition for o in self.observations], dtype=object)

    def feature_array(self) -> np.ndarray:
        """N x 9 float array in FEATURES order."""
        if not self.observations:
            return np.empty((0, len(FEATURES)))
        return np.array([o.features() for o in self.observations], dtype=np.float64)

    def select(self, keep: Iterable[bool], provenance: str | None = None) -> "GaitDataset":
        obs = tuple(o for o, k in zip(self.observations, keep) if k)
        return GaitDataset(obs, self.provenance if provenance is None else provenance)


def _parse_float(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise NonNumeric(row, column, raw) from None
    if not math.isfinite(value):
        raise NonNumeric(row, column, raw)
    bound = _BOUNDS.get(column)
    if bound is not None:
        lo, strict = bound
        if value < lo or (strict and value == lo):
            op = ">" if strict else ">="
            raise NonNumeric(row, column, raw, reason=f"out of range (must be {op} {lo:g})")
    return value


def _parse_int(raw: str, row: int, column: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise NonNumeric(row, column, raw, reason="not an integer") from None


def parse_dataset(csv_source: bytes | str | BinaryIO, provenance: str = "<stream>") -> GaitDataset:
    """Parse UTF-8 CSV content into a validated dataset.

    Columns bind by header name; extra columns are ignored. Row numbers in
    error messages count data rows from 1.
    """
    if isinstance(csv_source, bytes):
        text = csv_source.decode("utf-8-sig")
    elif isinstance(csv_source, str):
        text = csv_source
    else:
        text = csv_source.read().decode("utf-8-sig")

    if not text.strip():
        raise EmptyFile(f"{provenance}: no content")

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyFile(f"{provenance}: no header row") from None
    for name in COLUMNS:
        if name not in header:
            raise MissingColumn(name)
    index = {name: header.index(name) for name in COLUMNS}

    observations = []
    seen: set[int] = set()
    row_no = 0
    for record in reader:
        if not record or all(not cell.strip() for cell in record):
            continue
        row_no += 1
        if len(record) < len(header):
            record = record + [""] * (len(header) - len(record))
        cell = {name: record[i].strip() for name, i in index.items()}

        obs_id = _parse_int(cell["obs_id"], row_no, "obs_id")
        if obs_id in seen:
            raise DuplicateId(f"row {row_no}: duplicate obs_id {obs_id}")
        seen.add(obs_id)
        session = parse_session(cell["session"], row_no)
        condition = parse_condition(cell["condition"], row_no)
        phase = cell["phase"]
        if phase not in PHASES:
            raise BadLabel(row_no, "phase", phase, PHASES)
        values = {name: _parse_float(cell[name], row_no, name) for name in FEATURES}
        observations.append(
            GaitObservation(obs_id=obs_id, session=session, condition=condition, phase=phase, **values)
        )

    if not observations:
        raise EmptyFile(f"{provenance}: header present but no data rows")
    return GaitDataset(tuple(observations), provenance)


def read_dataset(path: str | Path) -> GaitDataset:
    path = Path(path)
    return parse_dataset(path.read_bytes(), provenance=str(path))


def serialize_dataset(ds: GaitDataset) -> str:
    """Inverse of parse_dataset; floats use repr so the round trip is exact."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for o in ds.observations:
        writer.writerow(
            [o.obs_id, o.session, o.condition, o.phase] + [repr(float(x)) for x in o.features()]
        )
    return buf.getvalue()


def filter_linear_phases(ds: GaitDataset) -> GaitDataset:
    kept = ds.select((o.phase == "linear" for o in ds.observations))
    if not kept.observations:
        raise EmptyAfterFilter(f"{ds.provenance}: no rows with phase=linear")
    return kept
