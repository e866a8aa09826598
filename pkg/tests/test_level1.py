import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitlevels.errors import DivisionByZeroError
from gaitlevels.ingest import FEATURES
from gaitlevels.level1 import (
    GPPS_WEIGHTS,
    EmptyCellWarning,
    ScoreRecord,
    custom_scores,
    delta_percent,
    gpps,
    gpps_from_parts,
    s_meca,
    score_matrix,
    session_deltas,
    summarize_scores,
)
from gaitlevels.preprocess import FeatureMatrix
from gaitlevels.synth import TABLE1_DELTA, TABLE1_GPPS

SEVEN = ("v", "c", "D", "A", "A_P", "A_L", "L")
EXACT_WEIGHTS = {
    "v": Fraction(15, 100),
    "c": Fraction(15, 100),
    "D": Fraction(-10, 100),
    "A": Fraction(-10, 100),
    "A_P": Fraction(-10, 100),
    "A_L": Fraction(-5, 100),
    "L": Fraction(10, 100),
}


def exact_s_meca(x):
    return sum(EXACT_WEIGHTS[k] * Fraction(str(x[k])) for k in SEVEN)


def obs(**kw):
    base = {f: 0.0 for f in FEATURES}
    base.update(kw)
    return base


def test_s_meca_zero():
    assert s_meca(obs()) == 0.0


def test_s_meca_weight_sum():
    assert s_meca(obs(**{k: 1.0 for k in SEVEN})) == pytest.approx(0.05, abs=1e-12)


def test_s_meca_hand_example():
    x = obs(v=0.8, c=0.6, D=0.5, A=0.2, A_P=0.1, A_L=0.3, L=0.7)
    expected = exact_s_meca(x)
    assert expected == Fraction(185, 1000)
    assert s_meca(x) == pytest.approx(float(expected), abs=1e-12)


def test_gpps_examples():
    assert gpps(obs()) == 0.0
    assert gpps_from_parts(0.05, 1.0, 1.0) == pytest.approx(1.20, abs=1e-12)
    assert gpps_from_parts(0.195, 0.5, 0.2) == pytest.approx(0.47, abs=1e-12)
    x = obs(v=0.8, c=0.6, D=0.5, A=0.2, A_P=0.1, A_L=0.3, L=0.7, CoP=0.5, CAPA=0.2)
    assert gpps(x) == pytest.approx(0.185 + 0.075 + 0.2, abs=1e-12)


def test_weight_vector_matches_scalar_formula():
    rng = np.random.default_rng(0)
    for _ in range(20):
        vals = rng.normal(size=9)
        x = dict(zip(FEATURES, vals))
        assert float(GPPS_WEIGHTS @ vals) == pytest.approx(gpps(x), abs=1e-12)


def test_score_matrix_rows():
    vals = np.array([[0.8, 0.6, 0.5, 0.2, 0.1, 0.3, 0.7, 0.5, 0.2], [0.0] * 9])
    m = FeatureMatrix(vals, np.array([7, 9]), np.array(["M1", "M2"], dtype=object), np.array(["OC3", "OC3"], dtype=object))
    recs = score_matrix(m)
    assert recs[0].obs_id == 7 and recs[1].session == "M2"
    assert recs[0].s_meca == pytest.approx(0.185, abs=1e-12)
    assert recs[0].gpps == pytest.approx(0.46, abs=1e-12)
    assert recs[1].gpps == 0.0


def test_custom_weights_are_a_separate_path():
    vals = np.ones((1, 9))
    m = FeatureMatrix(vals, np.array([1]), np.array(["M1"], dtype=object), np.array(["ONL"], dtype=object))
    assert custom_scores(m, {"v": 2.0, "CAPA": 1.0})[0] == 3.0
    with pytest.raises(ValueError):
        custom_scores(m, {"speed": 1.0})


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=7, max_size=7),
    st.floats(-10, 10),
)
def test_s_meca_linearity(values, alpha):
    x = obs(**dict(zip(SEVEN, values)))
    scaled = obs(**{k: alpha * v for k, v in zip(SEVEN, values)})
    assert s_meca(scaled) == pytest.approx(alpha * s_meca(x), abs=1e-9)


def _records(cells):
    out, i = [], 0
    for (cond, sess), vals in cells.items():
        for v in vals:
            out.append(ScoreRecord(i, sess, cond, 0.0, v))
            i += 1
    return out


def test_summary_two_points():
    (s,) = summarize_scores(_records({("ONL", "M1"): [8.0, 10.0]}))
    assert (s.mean, s.median, s.n) == (9.0, 9.0, 2)
    assert s.sd == pytest.approx(math.sqrt(2), abs=1e-12)
    assert s.q1 == 8.5 and s.q3 == 9.5


def test_summary_constant_cell():
    (s,) = summarize_scores(_records({("OBL", "M2"): [7.0, 7.0, 7.0]}))
    assert s.sd == 0.0 and s.q1 == 7.0 and s.q3 == 7.0


def test_summary_singleton():
    (s,) = summarize_scores(_records({("OC3", "M1"): [4.2]}))
    assert s.mean == s.median == 4.2
    assert s.sd == 0.0


def test_summary_orders_cells_and_warns_on_empty():
    recs = _records({("OC3P", "M2"): [1.0], ("ONL", "M1"): [2.0]})
    with pytest.warns(EmptyCellWarning):
        out = summarize_scores(recs, cells=[("ONL", "M1"), ("OC3P", "M2"), ("OSL", "M1")])
    assert [(s.condition, s.session) for s in out] == [("ONL", "M1"), ("OC3P", "M2")]


def test_summary_invariants_random():
    rng = np.random.default_rng(2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = summarize_scores(_records({("ONL", "M1"): list(rng.normal(size=31))}))
    s = out[0]
    assert s.q1 <= s.median <= s.q3 and s.sd >= 0


@pytest.mark.parametrize("condition", list(TABLE1_GPPS))
def test_delta_reproduces_table1(condition):
    (m1, _), (m2, _) = TABLE1_GPPS[condition]
    assert round(delta_percent(m1, m2), 2) == pytest.approx(TABLE1_DELTA[condition], abs=0.01)


def test_delta_of_equal_means_is_zero():
    for m in (0.1, -3.0, 8.3):
        assert delta_percent(m, m) == 0.0


def test_delta_division_by_zero():
    with pytest.raises(DivisionByZeroError):
        delta_percent(0.0, 1.0)
    with pytest.raises(ZeroDivisionError):
        delta_percent(0.0, 1.0)


def test_session_deltas_use_cell_means():
    recs = _records({("ONL", "M1"): [8.0, 8.6], ("ONL", "M2"): [8.5, 8.5], ("OSL", "M1"): [1.0]})
    (d,) = session_deltas(summarize_scores(recs))
    assert d.condition == "ONL"
    assert d.delta_percent == pytest.approx((8.5 - 8.3) / 8.3 * 100, abs=1e-9)
