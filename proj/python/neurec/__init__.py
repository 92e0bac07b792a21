"""NeuRec and baseline top-n recommenders for implicit feedback."""

from ._neurec import (
    ConfigError,
    DataError,
    EvalError,
    ExperimentError,
    IdMap,
    InteractionMatrix,
    Model,
    ModelError,
    NnError,
    Split,
    TrainConfig,
    average_precision,
    config_keys,
    evaluate,
    load_dataset,
    log_loss_of_margin,
    ndcg,
    precision_at_k,
    rank,
    recall_at_k,
    reciprocal_rank,
    result_csv,
    run_experiment,
    split_holdout,
    train_bpr_mf,
    train_mostpop,
    train_neurec,
    train_slim,
)

__all__ = [
    "ConfigError",
    "DataError",
    "EvalError",
    "ExperimentError",
    "IdMap",
    "InteractionMatrix",
    "Model",
    "ModelError",
    "NnError",
    "Split",
    "TrainConfig",
    "average_precision",
    "config_keys",
    "evaluate",
    "load_dataset",
    "log_loss_of_margin",
    "ndcg",
    "precision_at_k",
    "rank",
    "recall_at_k",
    "reciprocal_rank",
    "result_csv",
    "run_experiment",
    "split_holdout",
    "train_bpr_mf",
    "train_mostpop",
    "train_neurec",
    "train_slim",
]
