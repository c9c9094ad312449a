from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tecollapse.core import (
    ClassStats,
    ConfusionMatrix,
    HPConfig,
    LabeledTestSet,
    accuracy,
    class_stats,
    confusion_from_predictions,
    load_states,
    macro_f1,
    per_class_f1,
    rate_sums,
    state_test_set,
)
from tecollapse.errors import InputError

label_pairs = st.integers(1, 200).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 1), min_size=n, max_size=n),
                        st.lists(st.integers(0, 1), min_size=n, max_size=n)))


def _f1_oracle(y, p, cls):
    tp = sum(1 for a, b in zip(y, p) if a == cls and b == cls)
    fp = sum(1 for a, b in zip(y, p) if a != cls and b == cls)
    fn = sum(1 for a, b in zip(y, p) if a == cls and b != cls)
    return 0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)


@given(label_pairs)
@settings(max_examples=300, deadline=None)
def test_metrics_match_elementwise_oracle(yp):
    y, p = yp
    cm = confusion_from_predictions(y, p)
    assert cm.total == len(y)
    assert float(accuracy(cm)) == pytest.approx(sum(a == b for a, b in zip(y, p)) / len(y), abs=1e-15)
    expected = (_f1_oracle(y, p, 1) + _f1_oracle(y, p, 0)) / 2
    assert float(macro_f1(cm)) == pytest.approx(expected, abs=1e-12)


def test_confusion_cells():
    cm = confusion_from_predictions([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert cm == ConfusionMatrix(tp=2, fp=1, tn=1, fn=1)
    assert (cm.pp, cm.pn, cm.n_pos, cm.n_neg) == (3, 2, 3, 2)


def test_confusion_rejects_bad_input():
    with pytest.raises(InputError):
        confusion_from_predictions([1, 0], [1])
    with pytest.raises(InputError):
        confusion_from_predictions([1, 2], [1, 0])
    with pytest.raises(InputError):
        confusion_from_predictions([], [])


def test_undefined_f1_class_scores_zero():
    # nothing predicted negative and no negatives present for that class
    cm = ConfusionMatrix(tp=5, fp=0, tn=0, fn=0)
    assert per_class_f1(cm) == (Fraction(1), Fraction(0))
    assert macro_f1(cm) == Fraction(1, 2)


def test_metrics_are_exact_fractions():
    cm = ConfusionMatrix(tp=1, fp=1, tn=1, fn=0)
    assert accuracy(cm) == Fraction(2, 3)
    assert isinstance(macro_f1(cm), Fraction)


def test_single_class_test_set_rejected():
    with pytest.raises(InputError):
        LabeledTestSet("x", np.ones(5, dtype=int))


def test_states_table():
    states = load_states()
    assert set(states) == {"CA", "PR", "AZ", "AR", "AK", "AL"}
    assert states["CA"] == ClassStats(31011, 18989)
    assert states["PR"] == ClassStats(8109, 962)
    assert states["AK"] == ClassStats(2175, 1371)
    assert round(float(states["CA"].tr), 5) == 0.62022
    assert round(float(states["PR"].tr), 5) == 0.89395


def test_class_stats_of_state_test_set():
    s = state_test_set("AR")
    assert len(s) == 13929
    tr, fr = class_stats(s)
    assert tr + fr == 1
    assert tr == Fraction(10196, 13929)


def test_rate_sums():
    stats = ClassStats(n_pos=10, n_neg=5)
    cm = ConfusionMatrix(tp=8, fp=4, tn=1, fn=2)
    assert rate_sums(cm, stats) == (Fraction(1, 5) + Fraction(2, 10), Fraction(4, 5) + Fraction(8, 10))
    with pytest.raises(InputError):
        rate_sums(cm, ClassStats(9, 6))


def test_config_id_is_canonical():
    a = HPConfig("MLP", {"lr": 0.01, "hidden": 16, "dropout": 0.1, "epochs": 200})
    b = HPConfig("MLP", {"epochs": 200, "dropout": 0.1, "hidden": 16, "lr": 0.01})
    assert a == b and hash(a) == hash(b)
    assert a.config_id == "MLP[dropout=0.1,epochs=200,hidden=16,lr=0.01]"
    with pytest.raises(InputError):
        HPConfig("ML[P", {})
