"""Collapse-aware evaluation of tabular vs embedded classifiers under distribution shift."""

from .collapse import (
    CollapseReport,
    CollapseVerdict,
    Kind,
    collapse_ratio,
    collapse_report,
    collapse_verdict,
    near_collapse_ratio,
    projection_collapse_ratio,
    strong_collapse_ratio,
    strong_near_collapse_ratio,
)
from .core import ClassStats, ConfusionMatrix, HPConfig, LabeledTestSet, Modality, SweepRecord, accuracy, macro_f1
from .errors import ConfigError, FormatError, InputError, IntegrityError, TecollapseError, TrainingError
from .otl import fraction_best, ols_fit, plane_coordinates, spurious_acl_analysis

__version__ = "0.1.0"

__all__ = [
    "CollapseReport", "CollapseVerdict", "Kind", "collapse_ratio", "collapse_report", "collapse_verdict",
    "near_collapse_ratio", "projection_collapse_ratio", "strong_collapse_ratio", "strong_near_collapse_ratio",
    "ClassStats", "ConfusionMatrix", "HPConfig", "LabeledTestSet", "Modality", "SweepRecord",
    "accuracy", "macro_f1",
    "ConfigError", "FormatError", "InputError", "IntegrityError", "TecollapseError", "TrainingError",
    "fraction_best", "ols_fit", "plane_coordinates", "spurious_acl_analysis",
]
