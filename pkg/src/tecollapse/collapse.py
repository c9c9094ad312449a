"""Collapse predicates and the ratios built from them.

A model collapses on a test set when it predicts one class for every row.
It nearly collapses (on the positive side) when ``tn/n_neg + fn/n_pos < eps``:
the few negatives it does predict are negligible relative to the size of each
ground-truth class. The negative side mirrors this with ``fp/n_neg + tp/n_pos``.

All ratios are exact :class:`~fractions.Fraction` values over the number of
attempted configurations, errored ones included.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import ClassStats, ConfusionMatrix, Modality, SweepRecord, rate_sums
from .errors import ConfigError, InputError

DEFAULT_EPS = Fraction(1, 10)


class Kind(str, Enum):
    NONE = "none"
    STRICT_POSITIVE = "strict_positive"
    STRICT_NEGATIVE = "strict_negative"
    NEAR_POSITIVE = "near_positive"
    NEAR_NEGATIVE = "near_negative"

    @property
    def strict(self) -> bool:
        return self in (Kind.STRICT_POSITIVE, Kind.STRICT_NEGATIVE)

    @property
    def collapsed(self) -> bool:
        return self is not Kind.NONE

    @property
    def side(self) -> str | None:
        if self in (Kind.STRICT_POSITIVE, Kind.NEAR_POSITIVE):
            return "positive"
        if self in (Kind.STRICT_NEGATIVE, Kind.NEAR_NEGATIVE):
            return "negative"
        return None


MODES = ("strict", "inclusive")
SIDES = ("positive", "negative")


def as_fraction(x) -> Fraction:
    """Exact fraction of a user-supplied number; floats go through their repr,
    so ``0.1`` becomes exactly 1/10."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def check_eps(eps) -> Fraction:
    e = as_fraction(eps)
    if not 0 < e < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {eps}")
    return e


@dataclass(frozen=True)
class CollapseVerdict:
    kind: Kind
    rate_sum: Fraction
    epsilon_used: Fraction
    # both side sums are kept so a verdict can be re-thresholded at another eps
    positive_sum: Fraction = field(compare=False)
    negative_sum: Fraction = field(compare=False)

    def counts(self, mode: str) -> bool:
        """Whether this verdict is a collapse under ``mode``."""
        if mode == "strict":
            return self.kind.strict
        if mode == "inclusive":
            return self.kind.collapsed
        raise ConfigError(f"unknown mode {mode!r}, expected one of {MODES}")

    def on_side(self, side: str, eps=None) -> bool:
        """Strict or near collapse on ``side``, at ``eps`` if given, else at ``epsilon_used``."""
        if side not in SIDES:
            raise ConfigError(f"unknown side {side!r}, expected one of {SIDES}")
        if eps is None:
            return self.kind.side == side
        own = self.positive_sum if side == "positive" else self.negative_sum
        return own < check_eps(eps)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "rate_sum": fraction_dict(self.rate_sum), "epsilon": str(self.epsilon_used)}


def collapse_verdict(cm: ConfusionMatrix, stats: ClassStats, eps=DEFAULT_EPS) -> CollapseVerdict:
    e = check_eps(eps)
    if cm.total != stats.total:
        raise InputError(f"confusion matrix covers {cm.total} rows, test set has {stats.total}")
    pos_sum, neg_sum = rate_sums(cm, stats)
    if cm.pn == 0:
        kind, rate = Kind.STRICT_POSITIVE, pos_sum
    elif cm.pp == 0:
        kind, rate = Kind.STRICT_NEGATIVE, neg_sum
    # the two sums add to 2, so at most one side can fall below eps < 1
    elif pos_sum < e:
        kind, rate = Kind.NEAR_POSITIVE, pos_sum
    elif neg_sum < e:
        kind, rate = Kind.NEAR_NEGATIVE, neg_sum
    else:
        kind, rate = Kind.NONE, min(pos_sum, neg_sum)
    return CollapseVerdict(kind, rate, e, pos_sum, neg_sum)


def _check_unique(ids: Iterable[str]) -> list[str]:
    ids = list(ids)
    seen = set()
    for i in ids:
        if i in seen:
            raise InputError(f"duplicate config_id {i!r}")
        seen.add(i)
    return ids


def _ratio(count: int, total: int) -> Fraction:
    if total < 1:
        raise InputError("hyper-parameter set is empty")
    return Fraction(count, total)


def collapse_ratio(verdicts: Mapping[str, CollapseVerdict] | Sequence[tuple[str, CollapseVerdict]], mode: str = "inclusive", hp_size: int | None = None) -> Fraction:
    """Share of configs collapsed (either class) on one test set."""
    items = _items(verdicts)
    n = hp_size if hp_size is not None else len(items)
    return _ratio(sum(v.counts(mode) for _, v in items), n)


def _items(verdicts) -> list[tuple[str, object]]:
    items = list(verdicts.items()) if isinstance(verdicts, Mapping) else list(verdicts)
    _check_unique(k for k, _ in items)
    return items


def _pairs(pairs) -> list[tuple[str, tuple[CollapseVerdict, CollapseVerdict]]]:
    items = _items(pairs)
    for cid, p in items:
        if not isinstance(p, tuple) or len(p) != 2 or p[0] is None or p[1] is None:
            raise InputError(f"config {cid!r} is not paired across both test sets")
    return items


def strong_collapse_ratio(pairs, mode: str = "inclusive", hp_size: int | None = None) -> Fraction:
    """Share of configs collapsed on both test sets, any class combination."""
    items = _pairs(pairs)
    n = hp_size if hp_size is not None else len(items)
    return _ratio(sum(s.counts(mode) and q.counts(mode) for _, (s, q) in items), n)


def projection_collapse_ratio(pairs, mode: str = "inclusive", hp_size: int | None = None) -> Fraction:
    """Share of configs collapsed on at least one of the two test sets."""
    items = _pairs(pairs)
    n = hp_size if hp_size is not None else len(items)
    return _ratio(sum(s.counts(mode) or q.counts(mode) for _, (s, q) in items), n)


def near_collapse_ratio(verdicts, eps=None, side: str = "positive", hp_size: int | None = None) -> Fraction:
    """Share of configs that are strict or ``eps``-near collapsed on ``side``.

    With ``eps=None`` the epsilon each verdict was computed with is used.
    """
    items = _items(verdicts)
    n = hp_size if hp_size is not None else len(items)
    return _ratio(sum(v.on_side(side, eps) for _, v in items), n)


def strong_near_collapse_ratio(pairs, eps1=None, eps2=None, side: str = "positive", hp_size: int | None = None) -> Fraction:
    """Share of configs that are strict-or-near collapsed on ``side`` for both test sets."""
    items = _pairs(pairs)
    n = hp_size if hp_size is not None else len(items)
    return _ratio(sum(s.on_side(side, eps1) and q.on_side(side, eps2) for _, (s, q) in items), n)


def fraction_dict(f: Fraction) -> dict:
    return {
        "numerator": f.numerator,
        "denominator": f.denominator,
        "value": float(f),
        "percent": format_percent(f),
    }


def format_percent(f: Fraction) -> str:
    return f"{100 * float(f):.2f}%"


@dataclass(frozen=True)
class CollapseReport:
    hp_size: int
    epsilon: tuple[Fraction, Fraction]
    mode: str
    cr_S: Fraction
    cr_Q: Fraction
    cr_strong: Fraction
    cr_projection: Fraction
    pcr_S: Fraction
    pcr_Q: Fraction
    pcr_strong: Fraction
    per_config: Mapping[str, tuple[CollapseVerdict, CollapseVerdict]]
    errored: tuple[str, ...] = ()
    test_sets: tuple[str, str] = ("S", "Q")

    def ratios(self) -> dict[str, Fraction]:
        return {
            "cr_S": self.cr_S,
            "cr_Q": self.cr_Q,
            "cr_strong": self.cr_strong,
            "cr_projection": self.cr_projection,
            "pcr_S": self.pcr_S,
            "pcr_Q": self.pcr_Q,
            "pcr_strong": self.pcr_strong,
        }

    def to_dict(self) -> dict:
        return {
            "S": self.test_sets[0],
            "Q": self.test_sets[1],
            "hp_size": self.hp_size,
            "epsilon": [str(e) for e in self.epsilon],
            "mode": self.mode,
            "ratios": {
                k: {**fraction_dict(v), "count": int(v * self.hp_size), "of": self.hp_size}
                for k, v in self.ratios().items()
            },
            "errored": list(self.errored),
            "per_config": {
                cid: {"S": s.kind.value, "Q": q.kind.value,
                      "rate_sum_S": str(s.rate_sum), "rate_sum_Q": str(q.rate_sum)}
                for cid, (s, q) in sorted(self.per_config.items())
            },
        }


def collapse_report(
    pairs: Mapping[str, tuple[ConfusionMatrix, ConfusionMatrix]],
    stats_S: ClassStats,
    stats_Q: ClassStats,
    eps=(DEFAULT_EPS, DEFAULT_EPS),
    mode: str = "inclusive",
    errored: Sequence[str] = (),
    test_sets: tuple[str, str] = ("S", "Q"),
) -> CollapseReport:
    """Aggregate every ratio for one (family, encoder, S, Q) scenario.

    ``pairs`` maps config ids to their confusion matrices on S and Q.
    ``errored`` config ids count towards |HP| but never as collapses.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}, expected one of {MODES}")
    if not isinstance(eps, (tuple, list)):
        eps = (eps, eps)
    e1, e2 = check_eps(eps[0]), check_eps(eps[1])
    errored = tuple(_check_unique(errored))
    overlap = set(errored) & set(pairs)
    if overlap:
        raise InputError(f"configs both errored and evaluated: {sorted(overlap)}")
    verdicts = {
        cid: (collapse_verdict(cs, stats_S, e1), collapse_verdict(cq, stats_Q, e2))
        for cid, (cs, cq) in pairs.items()
    }
    n = len(verdicts) + len(errored)
    s_only = {cid: v[0] for cid, v in verdicts.items()}
    q_only = {cid: v[1] for cid, v in verdicts.items()}
    return CollapseReport(
        hp_size=n,
        epsilon=(e1, e2),
        mode=mode,
        cr_S=collapse_ratio(s_only, mode, n),
        cr_Q=collapse_ratio(q_only, mode, n),
        cr_strong=strong_collapse_ratio(verdicts, mode, n),
        cr_projection=projection_collapse_ratio(verdicts, mode, n),
        pcr_S=near_collapse_ratio(s_only, None, "positive", n),
        pcr_Q=near_collapse_ratio(q_only, None, "positive", n),
        pcr_strong=strong_near_collapse_ratio(verdicts, None, None, "positive", n),
        per_config=verdicts,
        errored=errored,
        test_sets=test_sets,
    )


def pair_records(records: Iterable[SweepRecord], S: str, Q: str) -> tuple[dict[str, tuple[ConfusionMatrix, ConfusionMatrix]], list[str]]:
    """Split one scenario's records into paired confusion matrices and errored ids.

    All records must share one (family, modality, encoder) group.
    """
    records = [r for r in records if r.test_domain in (S, Q)]
    groups = {r.group_key for r in records}
    if len(groups) > 1:
        raise InputError(f"records mix several (family, modality, encoder) groups: {sorted(groups)}")
    by = {}
    for r in records:
        key = (r.config_id, r.test_domain)
        if key in by:
            raise InputError(f"duplicate record for {r.config_id} on {r.test_domain}")
        by[key] = r
    pairs, errored = {}, []
    for cid in sorted({r.config_id for r in records}):
        rs, rq = by.get((cid, S)), by.get((cid, Q))
        if rs is None or rq is None:
            raise InputError(f"config {cid} lacks a record on {S if rs is None else Q}")
        if rs.errored or rq.errored:
            errored.append(cid)
        else:
            pairs[cid] = (rs.confusion, rq.confusion)
    return pairs, errored


def group_records(records: Iterable[SweepRecord], modality: Modality | None = None) -> dict[tuple[str, str, str], list[SweepRecord]]:
    out: dict[tuple[str, str, str], list[SweepRecord]] = {}
    for r in records:
        if modality is None or r.modality is modality:
            out.setdefault(r.group_key, []).append(r)
    return dict(sorted(out.items()))
