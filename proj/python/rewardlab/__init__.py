"""Python access to the rewardlab C++ core."""

from ._core import (
    NoiseModel,
    SuiteError,
    chain_true_values,
    config_hash,
    normalized_improvement,
    predicted_variance_gap,
    random_policy_baseline,
    run_suite,
    sample_mean_variance_ratio,
    tabular_experiment,
    train,
    variance_gap,
)

__all__ = [
    "NoiseModel",
    "SuiteError",
    "chain_true_values",
    "config_hash",
    "normalized_improvement",
    "predicted_variance_gap",
    "random_policy_baseline",
    "run_suite",
    "sample_mean_variance_ratio",
    "tabular_experiment",
    "train",
    "variance_gap",
]
