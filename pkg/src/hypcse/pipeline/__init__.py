"""Configuration, data loading, training, evaluation and exports."""

from .config import ConfigError, RunConfig, load_config
from .data import DataError, load_dataset
from .train import RunReport, evaluate, run_training, single_linkage_reference

__all__ = ["ConfigError", "DataError", "RunConfig", "RunReport", "evaluate", "load_config",
           "load_dataset", "run_training", "single_linkage_reference"]
