"""Provide a package for steinloss."""

__version__ = "0.0.0"

from .config import ExperimentConfig, load_experiment
from .exceptions import SteinLossError, SteinLossWarning
from .model_selection import LinearModelData, cp_star, select
from .presets import get_preset, list_presets

__all__ = [
    "ExperimentConfig",
    "LinearModelData",
    "SteinLossError",
    "SteinLossWarning",
    "cp_star",
    "get_preset",
    "list_presets",
    "load_experiment",
    "select",
]
