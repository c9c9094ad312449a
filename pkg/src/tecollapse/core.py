"""Domain types and exact confusion-matrix arithmetic.

Labels are encoded as integers: ``1`` is the positive class (the "<50k"
income bracket in the ACS setting) and ``0`` the negative class. Every
ratio is returned as a :class:`fractions.Fraction` so that identities such
as "an all-positive predictor scores exactly the positive class ratio" can
be asserted without float round-off.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError

POSITIVE = 1
NEGATIVE = 0


class Modality(str, Enum):
    TABULAR = "tabular"
    EMBEDDED = "embedded"


NATIVE_FAMILIES = ("LR", "MLP", "StumpEnsemble")


def as_labels(values: Sequence[int] | np.ndarray, name: str = "labels") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr.astype(np.int8)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InputError(f"{name} must contain only 0 (negative) and 1 (positive)")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class ClassStats:
    n_pos: int
    n_neg: int

    @property
    def total(self) -> int:
        return self.n_pos + self.n_neg

    @property
    def tr(self) -> Fraction:
        """Proportion of the positive class."""
        return Fraction(self.n_pos, self.total)

    @property
    def fr(self) -> Fraction:
        return Fraction(self.n_neg, self.total)


@dataclass(frozen=True, eq=False)
class LabeledTestSet:
    id: str
    labels: np.ndarray
    modality: Modality = Modality.TABULAR
    encoder_id: str | None = None
    n_pos: int = field(init=False)
    n_neg: int = field(init=False)

    def __post_init__(self):
        labels = as_labels(self.labels)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        n_pos = int(labels.sum())
        n_neg = int(labels.size - n_pos)
        if n_pos == 0 or n_neg == 0:
            raise InputError(
                f"test set {self.id!r} has a single class (n_pos={n_pos}, n_neg={n_neg})"
            )
        object.__setattr__(self, "n_pos", n_pos)
        object.__setattr__(self, "n_neg", n_neg)

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def stats(self) -> ClassStats:
        return ClassStats(self.n_pos, self.n_neg)

    @classmethod
    def from_counts(cls, id: str, n_pos: int, n_neg: int, **kwargs) -> "LabeledTestSet":
        """Build a test set with ``n_pos`` positives followed by ``n_neg`` negatives."""
        labels = np.concatenate([np.ones(n_pos, np.int8), np.zeros(n_neg, np.int8)])
        return cls(id=id, labels=labels, **kwargs)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise InputError(f"confusion count {name} is negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def pp(self) -> int:
        """Predicted positives."""
        return self.tp + self.fp

    @property
    def pn(self) -> int:
        """Predicted negatives."""
        return self.tn + self.fn

    @property
    def n_pos(self) -> int:
        return self.tp + self.fn

    @property
    def n_neg(self) -> int:
        return self.tn + self.fp

    def to_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def confusion_from_predictions(labels, preds) -> ConfusionMatrix:
    y = as_labels(labels, "labels")
    p = as_labels(preds, "preds")
    if y.size != p.size:
        raise InputError(f"length mismatch: {y.size} labels vs {p.size} predictions")
    if y.size == 0:
        raise InputError("cannot tally an empty prediction set")
    tp = int(np.count_nonzero((y == 1) & (p == 1)))
    fp = int(np.count_nonzero((y == 0) & (p == 1)))
    tn = int(np.count_nonzero((y == 0) & (p == 0)))
    fn = int(y.size - tp - fp - tn)
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _require_nonempty(cm: ConfusionMatrix) -> None:
    if cm.total <= 0:
        raise InputError("confusion matrix is empty")


def accuracy(cm: ConfusionMatrix) -> Fraction:
    _require_nonempty(cm)
    return Fraction(cm.tp + cm.tn, cm.total)


def _f1(tp: int, fp: int, fn: int) -> Fraction:
    denom = 2 * tp + fp + fn
    # undefined per-class F1 is scored 0
    return Fraction(2 * tp, denom) if denom else Fraction(0)


def per_class_f1(cm: ConfusionMatrix) -> tuple[Fraction, Fraction]:
    """(F1 of the positive class, F1 of the negative class)."""
    return _f1(cm.tp, cm.fp, cm.fn), _f1(cm.tn, cm.fn, cm.fp)


def macro_f1(cm: ConfusionMatrix) -> Fraction:
    _require_nonempty(cm)
    pos, neg = per_class_f1(cm)
    return (pos + neg) / 2


def class_stats(s: LabeledTestSet) -> tuple[Fraction, Fraction]:
    """Return ``(TR, FR)``: the positive and negative class proportions of ``s``."""
    st = s.stats
    return st.tr, st.fr


def rate_sums(cm: ConfusionMatrix, stats: ClassStats) -> tuple[Fraction, Fraction]:
    """Residual minority-prediction rates for both collapse sides.

    The first element is ``tn/n_neg + fn/n_pos`` (zero iff nothing is predicted
    negative), the second ``fp/n_neg + tp/n_pos`` (zero iff nothing is
    predicted positive).
    """
    if cm.n_pos != stats.n_pos or cm.n_neg != stats.n_neg:
        raise InputError(
            f"confusion matrix class counts ({cm.n_pos}+, {cm.n_neg}-) do not match "
            f"test set ({stats.n_pos}+, {stats.n_neg}-)"
        )
    positive_side = Fraction(cm.tn, stats.n_neg) + Fraction(cm.fn, stats.n_pos)
    negative_side = Fraction(cm.fp, stats.n_neg) + Fraction(cm.tp, stats.n_pos)
    return positive_side, negative_side


@dataclass(frozen=True)
class HPConfig:
    family: str
    params: Mapping[str, object]
    config_id: str = field(init=False)

    def __post_init__(self):
        if not self.family or any(c in self.family for c in ":[],="):
            raise InputError(f"invalid family name {self.family!r}")
        params = dict(sorted(self.params.items()))
        for key in params:
            if not key or any(c in key for c in ",=[]"):
                raise InputError(f"invalid parameter name {key!r}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "config_id", canonical_config_id(self.family, params))

    @property
    def is_native(self) -> bool:
        return self.family in NATIVE_FAMILIES

    def __hash__(self) -> int:
        return hash(self.config_id)

    def __eq__(self, other) -> bool:
        return isinstance(other, HPConfig) and other.config_id == self.config_id


def canonical_config_id(family: str, params: Mapping[str, object]) -> str:
    body = ",".join(
        f"{k}={json.dumps(params[k], sort_keys=True, separators=(',', ':'))}"
        for k in sorted(params)
    )
    return f"{family}[{body}]"


@dataclass(frozen=True, eq=False)
class SweepRecord:
    config: HPConfig
    modality: Modality
    encoder_id: str | None
    train_domain: str
    test_domain: str
    predictions: np.ndarray | None
    confusion: ConfusionMatrix | None
    error: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))

    @property
    def config_id(self) -> str:
        return self.config.config_id

    @property
    def family(self) -> str:
        return self.config.family

    @property
    def errored(self) -> bool:
        return self.error is not None

    @property
    def group_key(self) -> tuple[str, str, str]:
        """(family, modality, encoder): records sharing this key live in one plane."""
        return self.family, self.modality.value, self.encoder_id or ""

    @classmethod
    def from_predictions(
        cls,
        config: HPConfig,
        modality: Modality | str,
        encoder_id: str | None,
        train_domain: str,
        test_set: LabeledTestSet,
        predictions,
    ) -> "SweepRecord":
        preds = as_labels(predictions, "predictions")
        if preds.size != len(test_set):
            raise InputError(
                f"{config.config_id} on {test_set.id}: {preds.size} predictions for "
                f"{len(test_set)} labels"
            )
        return cls(
            config=config,
            modality=Modality(modality),
            encoder_id=encoder_id or None,
            train_domain=train_domain,
            test_domain=test_set.id,
            predictions=preds,
            confusion=confusion_from_predictions(test_set.labels, preds),
        )


def load_states() -> dict[str, ClassStats]:
    """Class statistics of the six ACS Income state test sets shipped with the package."""
    text = resources.files("tecollapse").joinpath("data/states.csv").read_text()
    out: dict[str, ClassStats] = {}
    for row in csv.DictReader(text.splitlines()):
        stats = ClassStats(int(row["n_pos"]), int(row["n_neg"]))
        if stats.total != int(row["n_total"]):
            raise InputError(f"states.csv row {row['state']} does not add up")
        out[row["state"]] = stats
    return out


def state_test_set(state: str) -> LabeledTestSet:
    st = load_states()[state]
    return LabeledTestSet.from_counts(state, st.n_pos, st.n_neg)
