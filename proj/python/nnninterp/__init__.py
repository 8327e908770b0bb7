"""Nearest-neighbor neural network interpolation of scattered 2-D property data."""

from ._core import (
    GridSpec,
    Model,
    NnnError,
    SpatialIndex,
    TrainConfig,
    Variogram,
    __version__,
    cross_validate,
    estimate_grid,
    fit_variogram,
    generate_field,
    idw,
    kriging,
    realize_grid,
    sample_wells,
    train,
    training_matrix,
)

__all__ = [
    "GridSpec",
    "Model",
    "NnnError",
    "SpatialIndex",
    "TrainConfig",
    "Variogram",
    "cross_validate",
    "estimate_grid",
    "fit_variogram",
    "generate_field",
    "idw",
    "kriging",
    "realize_grid",
    "sample_wells",
    "train",
    "training_matrix",
]
