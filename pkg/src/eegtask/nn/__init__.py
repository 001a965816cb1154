from .layers import AvgPool, Conv, Dropout, LogClamp, ShiftScale, Square, softmax
from .network import (
    STANDARD_PARAM_COUNT,
    STANDARD_SHAPE_CHAIN,
    ArchSpec,
    Network,
    build_difficulty_net,
    calibrate_shift_scale,
    cross_entropy,
    load_checkpoint,
    reduced_arch,
    save_checkpoint,
)
from .training import (
    Adam,
    CnnModel,
    EpochStats,
    TrainConfig,
    evaluate_network,
    fit_network,
    history_csv,
    stratified_split,
    train_cnn,
)

__all__ = [
    "Adam", "ArchSpec", "AvgPool", "CnnModel", "Conv", "Dropout", "EpochStats",
    "LogClamp", "Network", "ShiftScale", "Square", "STANDARD_PARAM_COUNT",
    "STANDARD_SHAPE_CHAIN", "TrainConfig", "build_difficulty_net",
    "calibrate_shift_scale", "cross_entropy", "evaluate_network", "fit_network",
    "history_csv", "load_checkpoint", "reduced_arch", "save_checkpoint",
    "softmax", "stratified_split", "train_cnn",
]
