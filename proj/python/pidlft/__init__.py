"""Sparse tensor completion by biased latent factorization with PID-refined SGD."""

from ._core import (
    CompareRow,
    DivergenceError,
    Entry,
    EpochStat,
    GridResult,
    InitScheme,
    Model,
    OptimizerKind,
    PidGains,
    PidState,
    SearchGrid,
    SparseTensor,
    SplitRatios,
    SplitResult,
    TensorShape,
    TrainConfig,
    TrainReport,
    compare,
    density,
    grid_search,
    instant_error,
    load_coo_file,
    load_model_file,
    nonlinear_map,
    pid_sgd_step,
    refined_error,
    rmse,
    save_coo_file,
    save_model_file,
    save_report_file,
    sgd_step,
    split,
    synth_lowrank,
    train,
)

__all__ = [
    "CompareRow",
    "DivergenceError",
    "Entry",
    "EpochStat",
    "GridResult",
    "InitScheme",
    "Model",
    "OptimizerKind",
    "PidGains",
    "PidState",
    "SearchGrid",
    "SparseTensor",
    "SplitRatios",
    "SplitResult",
    "TensorShape",
    "TrainConfig",
    "TrainReport",
    "compare",
    "density",
    "grid_search",
    "instant_error",
    "load_coo_file",
    "load_model_file",
    "nonlinear_map",
    "pid_sgd_step",
    "refined_error",
    "rmse",
    "save_coo_file",
    "save_model_file",
    "save_report_file",
    "sgd_step",
    "split",
    "synth_lowrank",
    "train",
]
