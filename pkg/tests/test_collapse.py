from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _fixtures import AK, AL, C2_CA_CELLS, CA, PR, cm_from_negatives, cm_strict_negative, cm_strict_positive, e5_cvar_ca_pr, linq_cvar_ca_al
from tecollapse.collapse import (
    Kind,
    collapse_ratio,
    collapse_report,
    collapse_verdict,
    format_percent,
    near_collapse_ratio,
    pair_records,
    projection_collapse_ratio,
    strong_collapse_ratio,
    strong_near_collapse_ratio,
)
from tecollapse.core import ClassStats, ConfusionMatrix, HPConfig, LabeledTestSet, SweepRecord
from tecollapse.errors import ConfigError, InputError


def test_strict_kinds():
    assert collapse_verdict(cm_strict_positive(CA), CA).kind is Kind.STRICT_POSITIVE
    assert collapse_verdict(cm_strict_negative(CA), CA).kind is Kind.STRICT_NEGATIVE
    assert collapse_verdict(cm_strict_positive(CA), CA).rate_sum == 0


def test_near_kinds_both_sides():
    s = ClassStats(n_pos=100, n_neg=100)
    assert collapse_verdict(cm_from_negatives(s, 2, 3), s).kind is Kind.NEAR_POSITIVE
    near_neg = ConfusionMatrix(tp=3, fp=2, tn=98, fn=97)
    v = collapse_verdict(near_neg, s)
    assert v.kind is Kind.NEAR_NEGATIVE and v.rate_sum == Fraction(5, 100)


def test_boundary_is_exclusive():
    s = ClassStats(n_pos=10, n_neg=10)
    # rate sum exactly 1/10
    assert collapse_verdict(cm_from_negatives(s, 1, 0), s).kind is Kind.NONE
    assert collapse_verdict(cm_from_negatives(s, 1, 0), s, eps=0.11).kind is Kind.NEAR_POSITIVE


def test_sfr_ak_rate_sum():
    v = collapse_verdict(cm_from_negatives(AK, 179, 27), AK)
    assert v.kind is Kind.NONE
    assert v.positive_sum == Fraction(179, 1371) + Fraction(27, 2175)
    assert abs(float(v.positive_sum) - 0.14298) < 1e-5


def test_c2_rate_sum():
    v = collapse_verdict(cm_from_negatives(CA, *C2_CA_CELLS), CA)
    assert v.kind is Kind.NEAR_POSITIVE
    assert abs(float(v.rate_sum) - 0.02314) < 1e-5


def test_bad_eps_and_mode():
    with pytest.raises(ConfigError):
        collapse_verdict(cm_strict_positive(CA), CA, eps=0)
    with pytest.raises(ConfigError):
        collapse_verdict(cm_strict_positive(CA), CA, eps=1)
    with pytest.raises(ConfigError):
        collapse_report({}, CA, PR, mode="loose", errored=["x"])


def test_verdict_rejects_foreign_matrix():
    with pytest.raises(InputError):
        collapse_verdict(cm_strict_positive(PR), CA)


def test_e5_fixture_ratios():
    r = collapse_report(e5_cvar_ca_pr(), CA, PR)
    assert r.hp_size == 203
    assert r.pcr_strong == Fraction(125, 203)
    assert format_percent(r.pcr_strong) == "61.58%"
    # c2 is near on CA, so it counts only in inclusive mode
    strict = collapse_report(e5_cvar_ca_pr(), CA, PR, mode="strict")
    assert strict.cr_S == Fraction(124, 203)
    assert strict.cr_Q == Fraction(123, 203)


def test_linq_fixture_ratios():
    r = collapse_report(linq_cvar_ca_al(), CA, AL)
    assert (r.pcr_S, r.pcr_Q, r.pcr_strong, r.cr_projection) == (
        Fraction(61, 203), Fraction(65, 203), Fraction(37, 203), Fraction(89, 203))
    assert [format_percent(x) for x in (r.pcr_S, r.pcr_Q, r.pcr_strong, r.cr_projection)] == [
        "30.05%", "32.02%", "18.23%", "43.84%"]


def test_errored_configs_count_in_denominator():
    pairs = {"a": (cm_strict_positive(CA), cm_strict_positive(PR))}
    r = collapse_report(pairs, CA, PR, errored=["b", "c"])
    assert r.hp_size == 3 and r.cr_strong == Fraction(1, 3)
    with pytest.raises(InputError):
        collapse_report(pairs, CA, PR, errored=["a"])


def test_duplicate_ids_rejected():
    v = collapse_verdict(cm_strict_positive(CA), CA)
    with pytest.raises(InputError):
        collapse_ratio([("a", v), ("a", v)])


def test_rethreshold_at_other_eps():
    v = collapse_verdict(cm_from_negatives(CA, *C2_CA_CELLS), CA)
    assert near_collapse_ratio({"c2": v}, eps=Fraction(1, 50)) == 0
    assert near_collapse_ratio({"c2": v}, eps=Fraction(1, 40)) == 1


def _random_verdict(rng):
    n_pos, n_neg = int(rng.integers(1, 30)), int(rng.integers(1, 30))
    s = ClassStats(n_pos, n_neg)
    mode = rng.integers(4)
    if mode == 0:
        cm = cm_strict_positive(s)
    elif mode == 1:
        cm = cm_strict_negative(s)
    else:
        tn, fn = int(rng.integers(0, n_neg + 1)), int(rng.integers(0, n_pos + 1))
        cm = cm_from_negatives(s, tn, fn)
    return collapse_verdict(cm, s, eps=Fraction(int(rng.integers(1, 10)), 10))


@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
@settings(max_examples=200, deadline=None)
def test_ratio_ordering_property(seed, n):
    rng = np.random.default_rng(seed)
    pairs = {f"c{i}": (_random_verdict(rng), _random_verdict(rng)) for i in range(n)}
    for mode in ("strict", "inclusive"):
        s = collapse_ratio({k: v[0] for k, v in pairs.items()}, mode)
        q = collapse_ratio({k: v[1] for k, v in pairs.items()}, mode)
        strong = strong_collapse_ratio(pairs, mode)
        proj = projection_collapse_ratio(pairs, mode)
        assert strong <= min(s, q) <= max(s, q) <= proj <= min(1, s + q)
        assert proj == s + q - strong


def _rec(cid, domain, preds, labels, error=None):
    ts = LabeledTestSet(domain, labels)
    if error:
        return SweepRecord(HPConfig("MLP", {"k": cid}), "embedded", "e", "tr", domain, None, None, error)
    return SweepRecord.from_predictions(HPConfig("MLP", {"k": cid}), "embedded", "e", "tr", ts, preds)


def test_pair_records():
    y = [1, 0, 1]
    recs = [_rec(1, "S", [1, 1, 1], y), _rec(1, "Q", [1, 0, 1], y),
            _rec(2, "S", None, y, "boom"), _rec(2, "Q", None, y, "boom")]
    pairs, errored = pair_records(recs, "S", "Q")
    assert list(pairs) == ["MLP[k=1]"] and errored == ["MLP[k=2]"]
    with pytest.raises(InputError):
        pair_records(recs[:1] + recs[2:], "S", "Q")


def test_strong_near_requires_both_sides():
    v_near = collapse_verdict(cm_from_negatives(CA, *C2_CA_CELLS), CA)
    v_none = collapse_verdict(cm_from_negatives(PR, 500, 3000), PR)
    assert strong_near_collapse_ratio({"x": (v_near, v_none)}) == 0
