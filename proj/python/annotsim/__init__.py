"""Annotator-selection simulation for active learning."""

from ._core import (
    Annotator,
    AnnotatorView,
    BatchConfig,
    ConfigError,
    DataError,
    Dataset,
    ExperimentConfig,
    ExperimentResult,
    IterationRecord,
    LabelHistory,
    SimParams,
    TestMode,
    UncertaintyStats,
    effective_accuracy,
    entropy,
    fatigue_level,
    generate_batch,
    least_confidence,
    load_csv,
    margin_confidence,
    parse_modes,
    query_type,
    ratio_confidence,
    recommend_optimal,
    recommend_rs,
    run_config,
    run_experiment,
)

__version__ = "0.1.0"
