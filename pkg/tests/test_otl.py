from fractions import Fraction

import numpy as np
import pytest

from _fixtures import CA, PR, MASS_POINT, spurious_fixture
from tecollapse.collapse import Kind
from tecollapse.core import HPConfig, LabeledTestSet, Modality, SweepRecord
from tecollapse.errors import ConfigError, InputError
from tecollapse.otl import (
    PlanePoint,
    bind_pairs,
    fraction_best,
    ols_fit,
    plane_coordinates,
    rank_methods_per_scenario,
    spurious_acl_analysis,
)


def _oracle(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    slope, intercept = np.linalg.solve(A.T @ A, A.T @ y)
    ss_tot = ((y - y.mean()) ** 2).sum()
    ss_res = ((y - slope * x - intercept) ** 2).sum()
    return slope, intercept, 1 - ss_res / ss_tot


def test_ols_against_normal_equations():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(3, 100))
        x = rng.uniform(0, 1, n)
        y = 0.3 + 0.5 * x + rng.normal(0, 0.1, n)
        fit = ols_fit(np.column_stack([x, y]))
        s, b, r2 = _oracle(x, y)
        assert abs(fit.slope - s) < 1e-10 and abs(fit.intercept - b) < 1e-10
        assert abs(fit.r2 - r2) < 1e-10


def test_degenerate_and_flat_x():
    fit = ols_fit([(0.1, 0.5), (0.9, 0.5), (0.4, 0.5)])
    assert fit.degenerate and fit.r2 is None and fit.slope == 0.0
    fit = ols_fit([(0.5, 0.2), (0.5, 0.6)])
    assert fit.slope == 0.0 and fit.intercept == pytest.approx(0.4)
    with pytest.raises(InputError):
        ols_fit([(0.1, 0.2)])


def test_spurious_fixture_flagged():
    rep = spurious_acl_analysis(spurious_fixture(30), CA, PR)
    assert rep.r2_noncollapsed.r2 < 0.3
    assert rep.r2_all.r2 - rep.r2_noncollapsed.r2 > 0.2
    assert rep.flagged
    assert rep.collapse_mass_point == MASS_POINT


def test_spurious_not_flagged_without_collapse():
    rep = spurious_acl_analysis(spurious_fixture(0), CA, PR)
    assert not rep.flagged and rep.collapse_mass_point is None


def test_spurious_r2_monotone_in_mass():
    r2 = [spurious_acl_analysis(spurious_fixture(k), CA, PR).r2_all.r2 for k in (0, 10, 30, 100)]
    assert r2 == sorted(r2)


def test_all_collapsed_flagged_outright():
    pts = [PlanePoint(f"m{i}", Modality.EMBEDDED, *MASS_POINT, Kind.STRICT_POSITIVE, Kind.STRICT_POSITIVE)
           for i in range(5)]
    rep = spurious_acl_analysis(pts, CA, PR)
    assert rep.flagged and rep.r2_all.degenerate and rep.r2_noncollapsed is None


def test_bind_pairs():
    t = [PlanePoint("a", Modality.TABULAR, 0.1, 0.2), PlanePoint("b", Modality.TABULAR, 0.3, 0.4)]
    e = [PlanePoint("b", Modality.EMBEDDED, 0.5, 0.6), PlanePoint("a", Modality.EMBEDDED, 0.7, 0.8)]
    b = bind_pairs(t, e)
    assert [x.config_id for x in b] == ["a", "b"] and b[0].embedded_point.x == 0.7
    with pytest.raises(InputError):
        bind_pairs(t, e[:1])
    with pytest.raises(InputError):
        bind_pairs([], e)


def test_plane_coordinates_skip_errored():
    y = np.array([1, 0, 1, 1])
    S, Q = LabeledTestSet("S", y), LabeledTestSet("Q", y)
    c1, c2 = HPConfig("MLP", {"k": 1}), HPConfig("MLP", {"k": 2})
    recs = [
        SweepRecord.from_predictions(c1, "embedded", "e", "tr", S, [1, 1, 1, 1]),
        SweepRecord.from_predictions(c1, "embedded", "e", "tr", Q, [1, 0, 0, 1]),
        SweepRecord(c2, Modality.EMBEDDED, "e", "tr", "S", None, None, "boom"),
        SweepRecord(c2, Modality.EMBEDDED, "e", "tr", "Q", None, None, "boom"),
    ]
    pts = plane_coordinates(recs, "S", "Q", "acc", S.stats, Q.stats)
    assert len(pts) == 1
    assert (pts[0].x, pts[0].y) == (0.75, 0.75)
    assert pts[0].collapsed_S is Kind.STRICT_POSITIVE and pts[0].collapsed_Q is Kind.NONE
    with pytest.raises(ConfigError):
        plane_coordinates(recs, "S", "Q", "auc")


def test_fraction_best_ties_and_delta():
    table = {("a", "s1"): 0.9, ("b", "s1"): 0.9, ("a", "s2"): 0.5, ("b", "s2"): 0.48}
    assert fraction_best(table).per_method == {"a": Fraction(1), "b": Fraction(1, 2)}
    assert fraction_best(table, 0.02).per_method == {"a": Fraction(1), "b": Fraction(1)}
    with pytest.raises(InputError):
        fraction_best({("a", "s1"): 1.0, ("b", "s2"): 1.0})


def test_ranking_competition_style():
    table = {("a", "s"): 0.9, ("b", "s"): 0.9, ("c", "s"): 0.5}
    ranks = rank_methods_per_scenario(table)["s"]
    assert [(e.method, e.rank, e.tied) for e in ranks] == [("a", 1, True), ("b", 1, True), ("c", 3, False)]
