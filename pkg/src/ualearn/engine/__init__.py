"""Active-learning orchestration: pools, oracles, cycles, metrics, reports."""

from .checkpoint import restore_checkpoint, save_checkpoint
from .config import (
    ExperimentConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    dump_config,
    git_blob_sha1,
    load_config,
)
from .loop import (
    SeedRun,
    build_dataset,
    build_model,
    derive_seed,
    evaluate,
    labeled_subset,
    predict_any,
    prepare_seed_run,
    run_cycle,
    run_experiment,
    run_seed,
    train_any,
)
from .metrics import classification_metrics, ece, evaluate_distributions
from .oracle import FailingOracle, Oracle, SimulatedOracle
from .pool import PoolState
from .reports import (
    CycleReport,
    aggregate_reports,
    read_reports_jsonl,
    write_reports_jsonl,
    write_summary_csv,
    write_timings_csv,
)

__all__ = [
    "CycleReport", "ExperimentConfig", "FailingOracle", "Oracle", "PoolState",
    "SeedRun", "SimulatedOracle", "aggregate_reports", "build_dataset",
    "build_model", "classification_metrics", "config_from_dict", "config_hash",
    "config_to_dict", "derive_seed", "dump_config", "ece", "evaluate",
    "evaluate_distributions", "git_blob_sha1", "labeled_subset", "load_config",
    "predict_any", "prepare_seed_run", "read_reports_jsonl",
    "restore_checkpoint", "run_cycle", "run_experiment", "run_seed",
    "save_checkpoint", "train_any", "write_reports_jsonl", "write_summary_csv",
    "write_timings_csv",
]
