from .cells import CELL_KINDS, CELLS, INPUT_SIZE, get_cell
from .model import (
    HiddenTrace,
    RnnModel,
    balance_hidden_sizes,
    classify,
    classify_many,
    count_parameters,
    load_model,
    model_from_json,
    model_to_json,
    new_model,
    record_traces,
    save_model,
    scores,
)
from .train import (
    TrainConfig,
    TrainingDiverged,
    TrainingLog,
    check_gradients,
    loss_and_grads,
    train,
)

__all__ = [
    "CELLS",
    "CELL_KINDS",
    "INPUT_SIZE",
    "HiddenTrace",
    "RnnModel",
    "TrainConfig",
    "TrainingDiverged",
    "TrainingLog",
    "balance_hidden_sizes",
    "check_gradients",
    "classify",
    "classify_many",
    "count_parameters",
    "get_cell",
    "load_model",
    "loss_and_grads",
    "model_from_json",
    "model_to_json",
    "new_model",
    "record_traces",
    "save_model",
    "scores",
    "train",
]
