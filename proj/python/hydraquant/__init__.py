"""Hydra and Quant time-series features, their ensembles and complementarity metrics."""

import json

from ._core import (
    ConfigError,
    DataError,
    Dataset,
    Error,
    TaintError,
    TimeoutError,
    canonical_correlations,
    cawpe_combine,
    dataset_from_arrays,
    hydra_features,
    load_data,
    make_synthetic,
    median_max_cross_correlation,
    num_threads,
    oracle_probe,
    prediction_metrics,
    quant_features,
    run_strategy,
    save_dataset,
    set_num_threads,
    strategies,
)
from . import _core

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "Error",
    "TaintError",
    "TimeoutError",
    "bench",
    "canonical_correlations",
    "cawpe_combine",
    "complementarity",
    "dataset_from_arrays",
    "hydra_features",
    "load_data",
    "make_synthetic",
    "median_max_cross_correlation",
    "num_threads",
    "oracle_probe",
    "prediction_metrics",
    "quant_features",
    "run_strategy",
    "save_dataset",
    "set_num_threads",
    "strategies",
]


def bench(datasets, strategies, seeds=(), folds=5, alpha=4.0, timeout=None, n_trees=None, out_dir=None):
    """Run records as dicts, one per (dataset, seed, strategy)."""
    if isinstance(datasets, str):
        datasets = [datasets]
    if isinstance(strategies, str):
        strategies = [strategies]
    raw = _core.bench_json(list(datasets), list(strategies), list(seeds), folds, alpha, timeout, n_trees, out_dir)
    return [json.loads(r) for r in raw]


def complementarity(datasets, seed=42, cap=5000, n_trees=None):
    """Complementarity reports as dicts, one per dataset."""
    if isinstance(datasets, str):
        datasets = [datasets]
    return [json.loads(r) for r in _core.complementarity_json(list(datasets), seed, cap, n_trees)]
