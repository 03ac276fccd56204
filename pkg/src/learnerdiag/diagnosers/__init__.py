"""The diagnoser families and a name-based factory."""
from __future__ import annotations

from typing import Optional

from ..data import SkillMatrix
from .base import (ConfigError, Diagnoser, GradientDiagnoser, NotFittedError, TrainConfig,
                   load_checkpoint, masked_overall, save_checkpoint, selection_score)
from .baselines import SkillVanilla, Vanilla
from .camilla import Camilla, CamillaBase, camilla_base_probability, subset_ability
from .irt import IRT, MIRT, irt_probability, mirt_probability
from .mf import MF
from .neural import MonotoneHead, NeuralCD

FAMILIES = {cls.family: cls for cls in (Vanilla, SkillVanilla, IRT, MIRT, MF, NeuralCD, CamillaBase, Camilla)}


def make_diagnoser(family: str, n_learners: int, n_samples: int, skills: Optional[SkillMatrix] = None,
                   task_kind: str = "classification", seed: int = 0, **hparams) -> Diagnoser:
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ConfigError(f"unknown diagnoser family {family!r}; choose from {sorted(FAMILIES)}") from None
    return cls(n_learners, n_samples, skills=skills, task_kind=task_kind, seed=seed, **hparams)


__all__ = [
    "FAMILIES", "make_diagnoser", "Diagnoser", "GradientDiagnoser", "TrainConfig", "ConfigError",
    "NotFittedError", "save_checkpoint", "load_checkpoint", "masked_overall", "selection_score",
    "Vanilla", "SkillVanilla", "IRT", "MIRT", "MF", "NeuralCD", "CamillaBase", "Camilla",
    "MonotoneHead", "irt_probability", "mirt_probability", "camilla_base_probability", "subset_ability",
]
