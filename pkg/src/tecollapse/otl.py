"""On-the-line analysis: ID/OOD planes, least-squares fits, cross-modality
bindings, spurious-fit diagnosis and FractionBest comparisons."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .collapse import DEFAULT_EPS, Kind, collapse_verdict
from .core import ClassStats, Modality, SweepRecord, accuracy, macro_f1
from .errors import ConfigError, InputError

METRICS = {"acc": accuracy, "accuracy": accuracy, "f1": macro_f1, "macro_f1": macro_f1}
DEGENERATE_SS = 1e-12


@dataclass(frozen=True)
class PlanePoint:
    config_id: str
    modality: Modality
    x: float
    y: float
    collapsed_S: Kind = Kind.NONE
    collapsed_Q: Kind = Kind.NONE

    @property
    def collapsed(self) -> bool:
        return self.collapsed_S.collapsed or self.collapsed_Q.collapsed


def plane_coordinates(records: Iterable[SweepRecord], S: str, Q: str, metric: str = "acc",
                      stats_S: ClassStats | None = None, stats_Q: ClassStats | None = None,
                      eps=DEFAULT_EPS) -> list[PlanePoint]:
    """One point per config of a single modality: (metric on S, metric on Q).

    Errored configs are skipped. Collapse flags need the class statistics of
    both test sets; without them every point is flagged ``none``. ``eps`` is
    one value or an (S, Q) pair.
    """
    eps_S, eps_Q = eps if isinstance(eps, (tuple, list)) else (eps, eps)
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ConfigError(f"unknown metric {metric!r}, expected acc or f1") from None
    by: dict[tuple[str, str], SweepRecord] = {}
    modalities = set()
    for r in records:
        if r.test_domain in (S, Q):
            by[(r.config_id, r.test_domain)] = r
            modalities.add((r.modality, r.encoder_id))
    if len(modalities) > 1:
        raise InputError(f"records span several modalities: {sorted((m.value, e or '') for m, e in modalities)}")
    points = []
    for cid in sorted({c for c, _ in by}):
        rs, rq = by.get((cid, S)), by.get((cid, Q))
        if rs is None or rq is None:
            raise InputError(f"config {cid} has no record on {S if rs is None else Q}")
        if rs.errored or rq.errored:
            continue
        ks = collapse_verdict(rs.confusion, stats_S, eps_S).kind if stats_S else Kind.NONE
        kq = collapse_verdict(rq.confusion, stats_Q, eps_Q).kind if stats_Q else Kind.NONE
        points.append(PlanePoint(cid, rs.modality, float(fn(rs.confusion)), float(fn(rq.confusion)), ks, kq))
    return points


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float | None  # None marks a degenerate fit (no variance in y)
    n: int

    @property
    def degenerate(self) -> bool:
        return self.r2 is None

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "r2": self.r2, "degenerate": self.degenerate, "n": self.n}


def ols_fit(points: Sequence[PlanePoint] | np.ndarray) -> LinearFit:
    """Least-squares line of y on x with intercept.

    ``r2`` is ``1 - SS_res / SS_tot``; it is ``None`` when ``SS_tot < 1e-12``.
    If x has no spread the slope is 0 and the intercept is the mean of y.
    """
    xy = _as_xy(points)
    n = xy.shape[0]
    if n < 2:
        raise InputError(f"need at least 2 points for a linear fit, got {n}")
    x, y = xy[:, 0], xy[:, 1]
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    sxx, sxy, syy = dx @ dx, dx @ dy, dy @ dy
    slope = sxy / sxx if sxx > 0 else 0.0
    intercept = my - slope * mx
    if syy < DEGENERATE_SS:
        return LinearFit(float(slope), float(intercept), None, n)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - (resid @ resid) / syy
    return LinearFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), n)


def _as_xy(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=np.float64)
    else:
        arr = np.array([(p.x, p.y) if isinstance(p, PlanePoint) else tuple(p) for p in points], dtype=np.float64)
    return arr.reshape(-1, 2)


@dataclass(frozen=True)
class Binding:
    config_id: str
    tabular_point: PlanePoint
    embedded_point: PlanePoint


def bind_pairs(tabular: Sequence[PlanePoint], embedded: Sequence[PlanePoint]) -> list[Binding]:
    """Join the two modalities' points on shared config ids, sorted by id."""
    if not tabular or not embedded:
        raise InputError("cannot bind: one of the point lists is empty")
    t = {p.config_id: p for p in tabular}
    e = {p.config_id: p for p in embedded}
    if len(t) != len(tabular) or len(e) != len(embedded):
        raise InputError("duplicate config ids in a point list")
    if t.keys() != e.keys():
        only_t = sorted(t.keys() - e.keys())
        only_e = sorted(e.keys() - t.keys())
        raise InputError(f"config sets differ: tabular-only {only_t}, embedded-only {only_e}")
    return [Binding(cid, t[cid], e[cid]) for cid in sorted(t)]


@dataclass(frozen=True)
class SpuriousAclReport:
    r2_all: LinearFit
    r2_noncollapsed: LinearFit | None
    n_points: int
    n_collapsed: int
    collapse_mass_point: tuple[float, float] | None
    flagged: bool
    delta_r2_threshold: float
    collapse_fraction_threshold: float

    @property
    def collapse_fraction(self) -> float:
        return self.n_collapsed / self.n_points if self.n_points else 0.0

    @property
    def delta_r2(self) -> float | None:
        if self.r2_noncollapsed is None:
            return None
        return (self.r2_all.r2 or 0.0) - (self.r2_noncollapsed.r2 or 0.0)

    def to_dict(self) -> dict:
        return {
            "r2_all": self.r2_all.to_dict(),
            "r2_noncollapsed": None if self.r2_noncollapsed is None else self.r2_noncollapsed.to_dict(),
            "delta_r2": self.delta_r2,
            "n_points": self.n_points,
            "n_collapsed": self.n_collapsed,
            "collapse_fraction": self.collapse_fraction,
            "collapse_mass_point": None if self.collapse_mass_point is None else list(self.collapse_mass_point),
            "flagged": self.flagged,
            "thresholds": {"delta_r2": self.delta_r2_threshold, "collapse_fraction": self.collapse_fraction_threshold},
        }


def spurious_acl_analysis(points: Sequence[PlanePoint], stats_S: ClassStats, stats_Q: ClassStats,
                          delta_r2: float = 0.2, collapse_fraction: float = 0.1,
                          min_clean: int = 3) -> SpuriousAclReport:
    """Compare the fit over all points with the fit over non-collapsed points.

    The scenario is flagged when collapsed points make up more than
    ``collapse_fraction`` of the plane and lift R^2 by more than ``delta_r2``.
    A degenerate fit counts as R^2 = 0 in that comparison; if every point is
    collapsed the scenario is flagged outright.
    """
    if len(points) < 2:
        raise InputError("spurious-fit analysis needs at least 2 points")
    fit_all = ols_fit(points)
    clean = [p for p in points if not p.collapsed]
    n_coll = len(points) - len(clean)
    fit_clean = ols_fit(clean) if len(clean) >= min_clean else None
    frac = n_coll / len(points)
    if not clean:
        flagged = True
    elif fit_clean is None:
        flagged = frac > collapse_fraction
    else:
        gap = (fit_all.r2 or 0.0) - (fit_clean.r2 or 0.0)
        flagged = frac > collapse_fraction and gap > delta_r2
    return SpuriousAclReport(
        r2_all=fit_all,
        r2_noncollapsed=fit_clean,
        n_points=len(points),
        n_collapsed=n_coll,
        collapse_mass_point=_mass_point(points, stats_S, stats_Q),
        flagged=flagged,
        delta_r2_threshold=delta_r2,
        collapse_fraction_threshold=collapse_fraction,
    )


def _mass_point(points, stats_S: ClassStats, stats_Q: ClassStats) -> tuple[float, float] | None:
    sides = Counter()
    for p in points:
        for k in (p.collapsed_S, p.collapsed_Q):
            if k.side:
                sides[k.side] += 1
    if not sides:
        return None
    # ties go to the positive class
    if sides["positive"] >= sides["negative"]:
        return float(stats_S.tr), float(stats_Q.tr)
    return float(stats_S.fr), float(stats_Q.fr)


@dataclass(frozen=True)
class FractionBestReport:
    delta: float
    per_method: Mapping[str, Fraction]
    n_scenarios: int

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "n_scenarios": self.n_scenarios,
            "per_method": {m: {"fraction": float(f), "count": int(f * self.n_scenarios)}
                           for m, f in self.per_method.items()},
        }


def _complete_table(table: Mapping[tuple[str, str], float]) -> tuple[list[str], list[str]]:
    if not table:
        raise InputError("metric table is empty")
    methods = sorted({m for m, _ in table})
    scenarios = sorted({s for _, s in table})
    missing = [(m, s) for m in methods for s in scenarios if (m, s) not in table]
    if missing:
        raise InputError(f"metric table is missing cells: {missing[:5]}{' ...' if len(missing) > 5 else ''}")
    return methods, scenarios


def fraction_best(table: Mapping[tuple[str, str], float], delta: float = 0.0) -> FractionBestReport:
    """Per method, the share of scenarios where it scores within ``delta`` of the best."""
    if delta < 0:
        raise ConfigError("delta must be >= 0")
    methods, scenarios = _complete_table(table)
    wins = Counter()
    for s in scenarios:
        best = max(table[(m, s)] for m in methods)
        for m in methods:
            if table[(m, s)] >= best - delta:
                wins[m] += 1
    n = len(scenarios)
    return FractionBestReport(delta, {m: Fraction(wins[m], n) for m in methods}, n)


@dataclass(frozen=True)
class RankEntry:
    method: str
    score: float
    rank: int  # competition ranking: tied methods share the best rank
    tied: bool


def rank_methods_per_scenario(table: Mapping[tuple[str, str], float]) -> dict[str, list[RankEntry]]:
    methods, scenarios = _complete_table(table)
    out = {}
    for s in scenarios:
        ordered = sorted(methods, key=lambda m: (-table[(m, s)], m))
        counts = Counter(table[(m, s)] for m in methods)
        entries, prev, rank = [], None, 0
        for i, m in enumerate(ordered):
            score = table[(m, s)]
            if score != prev:
                rank, prev = i + 1, score
            entries.append(RankEntry(m, score, rank, counts[score] > 1))
        out[s] = entries
    return out
