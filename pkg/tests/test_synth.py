import dataclasses

import numpy as np
import pytest

from gaitlevels.errors import InvalidSpec
from gaitlevels.ingest import FEATURES, parse_dataset, serialize_dataset
from gaitlevels.level1 import GPPS_WEIGHTS, gpps, score_matrix, summarize_scores
from gaitlevels.preprocess import FeatureMatrix
from gaitlevels.synth import (
    SCENARIO_CONTROL,
    SCENARIO_PAIR,
    TABLE1_GPPS,
    CellSpec,
    GeneratorSpec,
    calibrated_moments,
    dissociation_scenario,
    generate_calibrated,
    iid_scenario,
    neutral_offset,
    point_mass_table1,
    table1_spec,
    validate_spec,
)


def raw_gpps_by_condition(ds):
    recs = score_matrix(FeatureMatrix.from_dataset(ds))
    return {s.condition: s for s in summarize_scores(recs)}


def test_generation_is_deterministic():
    a = serialize_dataset(generate_calibrated(table1_spec(n=20, seed=5)))
    b = serialize_dataset(generate_calibrated(table1_spec(n=20, seed=5)))
    c = serialize_dataset(generate_calibrated(table1_spec(n=20, seed=6)))
    assert a == b and a != c


def test_generated_data_passes_ingest():
    for ds in (generate_calibrated(table1_spec(n=30)), dissociation_scenario(n=40), iid_scenario(n=20), point_mass_table1()):
        again = parse_dataset(serialize_dataset(ds).encode())
        assert again.observations == ds.observations


def test_calibrated_moments_hit_gpps_targets():
    for cell in table1_spec(n=10).cells:
        mean, sd = calibrated_moments(cell)
        assert float(GPPS_WEIGHTS @ mean) == pytest.approx(cell.target_mean, abs=1e-12)
        assert float(np.sqrt(np.sum((GPPS_WEIGHTS * sd) ** 2))) == pytest.approx(cell.target_sd, abs=1e-12)


def test_large_cells_track_targets():
    ds = generate_calibrated(table1_spec(n=2000, seed=11))
    recs = score_matrix(FeatureMatrix.from_dataset(ds))
    for s in summarize_scores(recs):
        target_mean, target_sd = TABLE1_GPPS[s.condition][0 if s.session == "M1" else 1]
        assert s.mean == pytest.approx(target_mean, abs=0.1)
        assert s.sd == pytest.approx(target_sd, abs=0.1)


def test_point_mass_is_exact():
    stats = {(s.condition, s.session): s for s in summarize_scores(score_matrix(FeatureMatrix.from_dataset(point_mass_table1())))}
    for cond, ((m1, _), (m2, _)) in TABLE1_GPPS.items():
        assert stats[(cond, "M1")].mean == pytest.approx(m1, abs=1e-9)
        assert stats[(cond, "M2")].mean == pytest.approx(m2, abs=1e-9)


def test_neutral_offset_leaves_gpps_unchanged():
    delta = neutral_offset()
    assert float(GPPS_WEIGHTS @ delta) == pytest.approx(0.0, abs=1e-15)
    x = dict(zip(FEATURES, np.random.default_rng(0).normal(size=9)))
    shifted = {f: x[f] + d for f, d in zip(FEATURES, delta)}
    assert gpps(shifted) == pytest.approx(gpps(x), abs=1e-12)


def test_dissociation_scenario_layout():
    ds = dissociation_scenario(seed=7, n=300)
    assert set(ds.sessions) == {"M1"}
    stats = raw_gpps_by_condition(ds)
    assert set(stats) == {*SCENARIO_PAIR, SCENARIO_CONTROL}
    assert abs(stats[SCENARIO_PAIR[0]].mean - stats[SCENARIO_PAIR[1]].mean) < 0.1
    assert stats[SCENARIO_CONTROL].mean < stats[SCENARIO_PAIR[0]].mean - 0.2


def test_spec_json_round_trip():
    spec = table1_spec(n=4, seed=9)
    assert GeneratorSpec.from_json(spec.to_json()) == spec


def test_spec_validation():
    cell = table1_spec(n=4).cells[0]
    bad_sd = dataclasses.replace(cell, sd=(-1.0,) + cell.sd[1:])
    with pytest.raises(InvalidSpec, match="negative"):
        validate_spec(GeneratorSpec((bad_sd,)))
    with pytest.raises(InvalidSpec):
        validate_spec(GeneratorSpec(()))
    with pytest.raises(InvalidSpec):
        validate_spec(GeneratorSpec((dataclasses.replace(cell, condition="OC4"),)))
    with pytest.raises(InvalidSpec):
        validate_spec(GeneratorSpec((cell, cell)))
    with pytest.raises(InvalidSpec):
        validate_spec(GeneratorSpec((dataclasses.replace(cell, target_sd=None),)))
    with pytest.raises(InvalidSpec):
        GeneratorSpec.from_json("{not json")


def test_uncalibrated_cell_uses_given_moments():
    cell = CellSpec("ONL", "M1", tuple(np.ones(9)), tuple(np.zeros(9)), 3)
    ds = generate_calibrated(GeneratorSpec((cell,), seed=0))
    assert np.all(ds.feature_array() == 1.0)
