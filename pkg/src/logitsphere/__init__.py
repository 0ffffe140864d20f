"""Sphere-constrained logistic model: estimators, integral-inequality
verification, and empirical sample-complexity sweeps."""

from .accel import NUMBA_ENABLED
from .model import (
    Dataset,
    DegenerateDataError,
    InverseTemperature,
    LabeledSample,
    UnitParameter,
    bernoulli_kl_bregman,
    disagreement_probability,
    log_partition,
    logistic_link,
    population_error_rate,
    sample_dataset,
)
from .rng import RngSeed

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "RngSeed",
    "Dataset",
    "DegenerateDataError",
    "InverseTemperature",
    "LabeledSample",
    "UnitParameter",
    "bernoulli_kl_bregman",
    "disagreement_probability",
    "log_partition",
    "logistic_link",
    "population_error_rate",
    "sample_dataset",
    "__version__",
]
