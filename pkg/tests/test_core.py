import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reliabench.core import PredictionLog, decide, sigmoid, validate_record
from reliabench.errors import (
    BadLabel,
    EmptyLog,
    InconsistentScore,
    MissingScore,
    MixedMcPresence,
    OutOfRange,
    ValidationError,
)

from oracles import numeric_sigmoid


class TestValidateRecord:
    def test_logit_materialises_prob(self):
        rec = validate_record({"id": "a", "label": 1, "logit": 0})
        assert rec.prob == 0.5

    def test_prob_out_of_range(self):
        with pytest.raises(OutOfRange) as info:
            validate_record({"id": "a", "label": 0, "prob": 1.2})
        assert info.value.record_id == "a"

    def test_consistent_logit_and_prob_accepted(self):
        p = numeric_sigmoid(2.0)
        assert p == pytest.approx(0.88079, abs=1e-5)
        rec = validate_record({"id": "a", "label": 1, "logit": 2, "prob": p})
        assert abs(rec.prob - p) <= 1e-9

    def test_inconsistent_logit_and_prob(self):
        with pytest.raises(InconsistentScore):
            validate_record({"id": "a", "label": 1, "logit": 2, "prob": 0.5})

    def test_missing_score(self):
        with pytest.raises(MissingScore):
            validate_record({"id": "a", "label": 1})

    @pytest.mark.parametrize("label", [2, -1, "x", 0.5, None])
    def test_bad_label(self, label):
        with pytest.raises(BadLabel):
            validate_record({"id": "a", "label": label, "prob": 0.3})

    def test_unknown_split(self):
        with pytest.raises(ValidationError):
            validate_record({"id": "a", "label": 1, "prob": 0.3, "split": "holdout"})

    def test_mc_mean_used_when_no_score(self):
        rec = validate_record({"id": "a", "label": 1, "mc_probs": [0.2, 0.4]})
        assert rec.prob == pytest.approx(0.3, abs=1e-15)

    def test_mc_entry_out_of_range(self):
        with pytest.raises(OutOfRange):
            validate_record({"id": "a", "label": 1, "mc_probs": [0.2, 1.4]})

    def test_nonfinite_logit(self):
        with pytest.raises(OutOfRange):
            validate_record({"id": "a", "label": 1, "logit": float("nan")})

    def test_temperature_consistency(self):
        rec = validate_record({"id": "a", "label": 1, "logit": 2.0, "temperature": 2.0})
        assert rec.prob == pytest.approx(numeric_sigmoid(1.0), abs=1e-15)

    @given(z=st.floats(-30, 30), y=st.integers(0, 1),
           strata=st.dictionaries(st.text(min_size=1, max_size=5), st.text(max_size=5), max_size=3))
    def test_revalidation_is_idempotent(self, z, y, strata):
        first = validate_record({"id": "x", "label": y, "logit": z, "strata": strata})
        second = validate_record(first.to_dict())
        assert second == first


class TestDecide:
    @pytest.mark.parametrize("prob, threshold, expected", [
        (0.5, 0.5, 1),
        (0.49999, 0.5, 0),
        (0.7, 0.8, 0),
        (0.8, 0.8, 1),
    ])
    def test_examples(self, prob, threshold, expected):
        assert decide(prob, threshold) == expected

    @given(a=st.floats(0, 1), b=st.floats(0, 1), t=st.floats(0.01, 0.99))
    def test_monotone(self, a, b, t):
        lo, hi = min(a, b), max(a, b)
        assert decide(lo, t) <= decide(hi, t)

    def test_vectorised(self):
        out = decide(np.array([0.1, 0.5, 0.9]))
        np.testing.assert_array_equal(out, [0, 1, 1])


class TestSigmoid:
    @given(st.floats(-700, 700))
    def test_matches_closed_form(self, z):
        ref = numeric_sigmoid(z) if z > -700 else 0.0
        assert sigmoid(z) == pytest.approx(ref, rel=1e-12, abs=1e-300)

    def test_extremes_are_finite(self):
        out = sigmoid(np.array([-1e4, 1e4]))
        assert np.all(np.isfinite(out))
        assert out[0] == 0.0 and out[1] == 1.0


class TestPredictionLog:
    def test_rejects_empty(self):
        with pytest.raises(EmptyLog):
            PredictionLog([])

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValidationError):
            PredictionLog([{"id": "a", "label": 1, "prob": 0.2}, {"id": "a", "label": 0, "prob": 0.3}])

    def test_mixed_mc_presence_reports_id(self):
        with pytest.raises(MixedMcPresence) as info:
            PredictionLog([
                {"id": "a", "label": 1, "prob": 0.2},
                {"id": "b", "label": 0, "mc_probs": [0.1]},
                {"id": "c", "label": 0, "prob": 0.3},
            ])
        assert info.value.record_id == "b"

    def test_records_are_immutable(self):
        log = PredictionLog([{"id": "a", "label": 1, "prob": 0.2, "strata": {"g": "A"}}])
        with pytest.raises(Exception):
            log[0].prob = 0.9
        with pytest.raises(TypeError):
            log[0].strata["g"] = "B"

    def test_columns_align_with_records(self):
        log = PredictionLog([{"id": "a", "label": 1, "logit": 1.0}, {"id": "b", "label": 0, "logit": -1.0}])
        cols = log.columns()
        assert list(cols.ids) == ["a", "b"]
        np.testing.assert_array_equal(cols.labels, [1, 0])
        assert cols.probs[0] == pytest.approx(1 / (1 + math.exp(-1)))

    def test_logits_none_when_any_missing(self):
        log = PredictionLog([{"id": "a", "label": 1, "logit": 1.0}, {"id": "b", "label": 0, "prob": 0.1}])
        assert log.logits() is None
