"""Shared fixture builders: reference verdict sets and point clouds."""

from __future__ import annotations

import numpy as np

from tecollapse.core import ClassStats, ConfusionMatrix, load_states
from tecollapse.otl import PlanePoint
from tecollapse.collapse import Kind
from tecollapse.core import Modality

STATES = load_states()
CA, PR, AL, AK = STATES["CA"], STATES["PR"], STATES["AL"], STATES["AK"]

# (tn, fn) on CA chosen so that tn/n_neg + fn/n_pos lands within 1e-5 of 0.02314
C2_CA_CELLS = (429, 17)


def cm_from_negatives(stats: ClassStats, tn: int, fn: int) -> ConfusionMatrix:
    """Confusion matrix whose predicted-negative cells are ``tn`` and ``fn``."""
    return ConfusionMatrix(tp=stats.n_pos - fn, fp=stats.n_neg - tn, tn=tn, fn=fn)


def cm_strict_positive(stats: ClassStats) -> ConfusionMatrix:
    return cm_from_negatives(stats, 0, 0)


def cm_strict_negative(stats: ClassStats) -> ConfusionMatrix:
    return ConfusionMatrix(tp=0, fp=0, tn=stats.n_neg, fn=stats.n_pos)


def cm_healthy(stats: ClassStats, rng: np.random.Generator) -> ConfusionMatrix:
    """A non-collapsed classifier: recall on each class between 0.55 and 0.9."""
    tn = int(stats.n_neg * rng.uniform(0.55, 0.9))
    tp = int(stats.n_pos * rng.uniform(0.55, 0.9))
    return ConfusionMatrix(tp=tp, fp=stats.n_neg - tn, tn=tn, fn=stats.n_pos - tp)


def e5_cvar_ca_pr() -> dict[str, tuple[ConfusionMatrix, ConfusionMatrix]]:
    """203 configs on (CA, PR): 123 strict on both, the two near collapses c1
    and c2, and 78 healthy configs."""
    rng = np.random.default_rng(125)
    pairs = {}
    for i in range(123):
        pairs[f"strict-{i:03d}"] = (cm_strict_positive(CA), cm_strict_positive(PR))
    pairs["c1"] = (cm_strict_positive(CA), cm_from_negatives(PR, 1, 0))
    pairs["c2"] = (cm_from_negatives(CA, *C2_CA_CELLS), cm_from_negatives(PR, 8, 0))
    for i in range(78):
        pairs[f"ok-{i:03d}"] = (cm_healthy(CA, rng), cm_healthy(PR, rng))
    return pairs


def linq_cvar_ca_al() -> dict[str, tuple[ConfusionMatrix, ConfusionMatrix]]:
    """203 configs on (CA, AL) with strict collapses only: 37 on both sets,
    24 on CA alone, 28 on AL alone, 114 healthy."""
    rng = np.random.default_rng(61)
    pairs = {}
    for i in range(37):
        pairs[f"both-{i:03d}"] = (cm_strict_positive(CA), cm_strict_positive(AL))
    for i in range(24):
        pairs[f"ca-{i:03d}"] = (cm_strict_positive(CA), cm_healthy(AL, rng))
    for i in range(28):
        pairs[f"al-{i:03d}"] = (cm_healthy(CA, rng), cm_strict_positive(AL))
    for i in range(114):
        pairs[f"ok-{i:03d}"] = (cm_healthy(CA, rng), cm_healthy(AL, rng))
    return pairs


MASS_POINT = (float(CA.tr), float(PR.tr))


def spurious_fixture(n_mass: int = 30, seed: int = 7) -> list[PlanePoint]:
    """20 scattered non-collapsed points plus ``n_mass`` copies of the (CA, PR)
    class-ratio point, flagged strict positive on both sets."""
    rng = np.random.default_rng(seed)
    pts = []
    xs = rng.uniform(0.70, 0.84, 20)
    ys = rng.uniform(0.55, 0.80, 20)
    for i, (x, y) in enumerate(zip(xs, ys)):
        pts.append(PlanePoint(f"clean-{i:02d}", Modality.EMBEDDED, float(x), float(y)))
    for i in range(n_mass):
        pts.append(PlanePoint(f"mass-{i:03d}", Modality.EMBEDDED, *MASS_POINT,
                              Kind.STRICT_POSITIVE, Kind.STRICT_POSITIVE))
    return pts


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
