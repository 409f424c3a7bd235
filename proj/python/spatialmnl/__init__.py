"""Bayesian spatial multinomial logit for share data (Polya-Gamma Gibbs sampler)."""

from ._core import (
    ConfigError,
    Model,
    NumericalError,
    class_probabilities,
    fit,
    knn_weights,
    log_det,
    log_odds,
    loglik,
    monte_carlo,
    pg1_mean,
    pg1_variance,
    pg_draw,
    simulate,
)

__all__ = [
    "ConfigError",
    "Model",
    "NumericalError",
    "class_probabilities",
    "fit",
    "knn_weights",
    "log_det",
    "log_odds",
    "loglik",
    "monte_carlo",
    "pg1_mean",
    "pg1_variance",
    "pg_draw",
    "simulate",
]
