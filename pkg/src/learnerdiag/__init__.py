"""Cognitive-diagnosis style evaluation of machine-learning models.

Learners (trained models) answer data samples; a diagnoser fitted on the
resulting response log estimates per-skill ability for each learner and
difficulty/discrimination for each sample.
"""
from .data import (CLASSIFICATION, DEFAULT_SEEDS, REGRESSION, AbilityProfile, DataError, DatasetSplit,
                   FitSummary, ResponseMatrix, SkillMatrix)
from .diagnosers import FAMILIES, TrainConfig, load_checkpoint, make_diagnoser, save_checkpoint

__all__ = [
    "CLASSIFICATION", "REGRESSION", "DEFAULT_SEEDS", "AbilityProfile", "DataError", "DatasetSplit",
    "FitSummary", "ResponseMatrix", "SkillMatrix", "FAMILIES", "TrainConfig", "load_checkpoint",
    "make_diagnoser", "save_checkpoint",
]
__version__ = "0.1.0"
