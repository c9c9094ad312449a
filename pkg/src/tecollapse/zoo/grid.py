"""Hyper-parameter grids and their deterministic expansion."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..core import HPConfig
from ..errors import ConfigError


@dataclass(frozen=True)
class HPGrid:
    family: str
    axes: Mapping[str, Sequence[object]]
    sample_cap: int | None = None
    sample_seed: int = 0
    # external families are never trained here; their predictions are read from this JSONL
    ingest: str | None = None
    fixed: Mapping[str, object] = field(default_factory=dict)

    @property
    def size(self) -> int:
        """Size of the full Cartesian product, before any subsampling."""
        n = 1
        for values in self.axes.values():
            n *= len(values)
        return n

    @classmethod
    def from_dict(cls, d: Mapping) -> "HPGrid":
        try:
            family = d["family"]
            axes = d["axes"]
        except KeyError as exc:
            raise ConfigError(f"grid is missing field {exc}") from None
        cap = d.get("sample_cap")
        return cls(
            family=family,
            axes={k: list(v) if isinstance(v, (list, tuple)) else [v] for k, v in axes.items()},
            sample_cap=int(cap) if cap is not None else None,
            sample_seed=int(d.get("sample_seed", 0)),
            ingest=d.get("ingest"),
            fixed=dict(d.get("fixed", {})),
        )


def expand_grid(g: HPGrid) -> list[HPConfig]:
    """Cartesian product in lexicographic order (axes sorted by name, values in
    declared order), subsampled without replacement when ``sample_cap`` is set.
    Subsampled configs keep their relative product order."""
    if not g.axes:
        raise ConfigError(f"{g.family} grid has no axes")
    names = sorted(g.axes)
    for name in names:
        if len(g.axes[name]) == 0:
            raise ConfigError(f"{g.family} grid axis {name!r} is empty")
    clash = set(names) & set(g.fixed)
    if clash:
        raise ConfigError(f"{g.family} grid: {sorted(clash)} both swept and fixed")
    configs = [
        HPConfig(g.family, {**g.fixed, **dict(zip(names, combo))})
        for combo in itertools.product(*(g.axes[n] for n in names))
    ]
    if len({c.config_id for c in configs}) != len(configs):
        raise ConfigError(f"{g.family} grid has duplicate values on some axis")
    if g.sample_cap is not None:
        if g.sample_cap < 1:
            raise ConfigError(f"{g.family} grid: sample_cap must be >= 1")
        if g.sample_cap < len(configs):
            rng = np.random.default_rng(g.sample_seed)
            keep = np.sort(rng.choice(len(configs), size=g.sample_cap, replace=False))
            configs = [configs[i] for i in keep]
    return configs


def _frange(start: float, stop: float, step: float, scale: float) -> list[float]:
    n = int(round((stop - start) / step))
    return [round((start + i * step) * scale, 12) for i in range(n + 1)]


def lr_l2_values() -> list[float]:
    """The 100 L2 penalties of the shared logistic-regression grid."""
    vals = _frange(1, 10, 1, 1e-4)  # 1e-4 .. 1e-3
    vals += _frange(1.5, 10, 0.5, 1e-3)  # 1.5e-3 .. 1e-2
    vals += _frange(1.5, 10, 0.5, 1e-2)
    vals += _frange(1.5, 10, 0.5, 1e-1)  # .. 1
    vals += [1.3, 1.5, 1.7, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0, 9.0]
    vals += [10.0, 15.0, 20.0] + [float(v) for v in range(30, 101, 10)]
    vals += [200.0, 300.0, 400.0, 500.0, 700.0]
    vals += [1e3, 2e3, 3e3, 5e3, 1e4, 5e4]
    return vals


MLP_AXES = {
    "lr": [0.001, 0.003, 0.005, 0.01],
    "hidden": [16, 32, 64, 128],
    "dropout": [0.0, 0.1],
    "epochs": [50, 100, 200],
}


def full_grids() -> dict[str, HPGrid]:
    """The seven shared grids at full size, with per-family sample caps."""
    return {
        "MLP": HPGrid("MLP", MLP_AXES),
        "CVaR-DRO": HPGrid("CVaR-DRO", {"alpha": [0.01, 0.1, 0.2, 0.3, 0.5, 1.0], **MLP_AXES}, sample_cap=203),
        "LR": HPGrid("LR", {"l2": lr_l2_values()}),
        "XGB": HPGrid("XGB", {
            "lr": [0.1, 0.3, 1.0, 2.0],
            "min_split_loss": [0.0, 0.1, 0.5],
            "max_depth": [4, 6, 8],
            "colsample_bytree": [0.7, 0.9, 1.0],
            "colsample_bylevel": [0.7, 0.9, 1.0],
            "max_bins": [128, 256, 512],
            "grow_policy": ["depthwise", "lossguide"],
        }, sample_cap=200),
        "StumpEnsemble": HPGrid("StumpEnsemble", {
            "lr": [0.01, 0.1, 0.5, 1.0],
            "n_estimators": [32, 64, 128, 256],
            "max_depth": [2, 4, 8, 16],
            "min_child_samples": [1, 2, 4, 8],
        }, sample_cap=200),
        "RF": HPGrid("RF", {
            "n_estimators": [32, 64, 128, 256, 512],
            "min_samples_split": [2, 4, 8, 16],
            "min_samples_leaf": [1, 2, 4, 8],
            "max_features": ["sqrt", "log2"],
            "ccp_alpha": [0.0, 0.001, 0.01, 0.1],
        }, sample_cap=101),
        "SVM": HPGrid("SVM", {
            "C": [1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            "kernel": ["linear", "rbf"],
            "gamma": [0.1, 0.3, 0.5, 1.0, 1.5, 2.0, "scale", "auto"],
        }, sample_cap=34, fixed={"loss": "squared_hinge"}),
    }
