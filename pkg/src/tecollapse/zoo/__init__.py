"""Bound-pair training over shared hyper-parameter grids."""

from .grid import HPGrid, expand_grid, full_grids
from .learners import train, train_lr, train_mlp, train_stump_ensemble
from .sweep import (
    ModalitySpec,
    SweepData,
    SweepManifest,
    WellDefinednessVerdict,
    check_well_defined,
    read_records,
    run_sweep,
    write_records,
)

__all__ = [
    "HPGrid", "expand_grid", "full_grids",
    "train", "train_lr", "train_mlp", "train_stump_ensemble",
    "ModalitySpec", "SweepData", "SweepManifest", "WellDefinednessVerdict",
    "check_well_defined", "read_records", "run_sweep", "write_records",
]
