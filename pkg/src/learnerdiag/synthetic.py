"""Seeded synthetic response logs with planted parameters."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .data import CLASSIFICATION, ResponseMatrix, SkillMatrix, normalize_task
from .diagnosers.base import _sigmoid
from .diagnosers.irt import IRT_SCALE

SYNTHETIC_FAMILIES = ("irt", "mirt", "mf", "camilla_base")


@dataclass
class SyntheticSpec:
    family: str = "irt"
    n_learners: int = 100
    n_samples: int = 500
    n_skills: int = 3
    seed: int = 42
    task_kind: str = CLASSIFICATION
    density: float = 1.0          # fraction of (learner, sample) cells observed
    noise: float = 0.05           # Gaussian sd for regression scores
    threshold: bool = False       # deterministic responses: prob >= 0.5
    ability_sd: float = 1.0
    difficulty_sd: float = 1.0
    discrimination_range: tuple = (0.5, 2.0)

    def __post_init__(self):
        if self.family not in SYNTHETIC_FAMILIES:
            raise ValueError(f"unknown synthetic family {self.family!r}; choose from {SYNTHETIC_FAMILIES}")
        if min(self.n_learners, self.n_samples, self.n_skills) < 1:
            raise ValueError("counts must be positive")
        if not 0 < self.density <= 1:
            raise ValueError("density must be in (0, 1]")
        self.task_kind = normalize_task(self.task_kind)


@dataclass
class SyntheticData:
    responses: ResponseMatrix
    planted: Dict[str, np.ndarray]
    probabilities: np.ndarray
    skills: Optional[SkillMatrix] = None


def _random_q(rng, n_samples: int, n_skills: int) -> np.ndarray:
    q = (rng.random((n_samples, n_skills)) < 0.3).astype(np.float64)
    primary = rng.integers(0, n_skills, size=n_samples)
    q[np.arange(n_samples), primary] = 1.0
    return q


def generate_synthetic(spec: SyntheticSpec) -> SyntheticData:
    rng = np.random.default_rng(spec.seed)
    n, m, k = spec.n_learners, spec.n_samples, spec.n_skills
    lo, hi = spec.discrimination_range
    skills = None
    if spec.family == "irt":
        a = rng.normal(0.0, spec.ability_sd, n)
        d = rng.normal(0.0, spec.difficulty_sd, m)
        disc = rng.uniform(lo, hi, m)
        probs = _sigmoid(IRT_SCALE * disc[None, :] * (a[:, None] - d[None, :]))
        planted = {"a": a, "d": d, "k": disc}
    elif spec.family == "mirt":
        theta = rng.normal(0.0, spec.ability_sd, (n, k))
        disc = rng.uniform(lo, hi, (m, k)) / np.sqrt(k)
        d = rng.normal(0.0, spec.difficulty_sd, m)
        probs = _sigmoid(theta @ disc.T - d[None, :])
        planted = {"theta": theta, "k": disc, "d": d}
    elif spec.family == "mf":
        u = rng.normal(0.0, spec.ability_sd, (n, k))
        v = rng.normal(0.0, 1.0, (m, k))
        probs = _sigmoid(u @ v.T)
        planted = {"u": u, "v": v}
    else:
        q = _random_q(rng, m, k)
        ability = rng.normal(0.0, spec.ability_sd, (n, k))
        d = rng.normal(0.0, spec.difficulty_sd, m)
        disc = rng.uniform(lo, hi, (m, k))
        logits = ((q * disc)[None, :, :] * (ability[:, None, :] - d[None, :, None])).sum(axis=2)
        probs = _sigmoid(logits)
        planted = {"A": ability, "D": d, "b": disc}
        skills = SkillMatrix(q)

    observed = rng.random((n, m)) < spec.density if spec.density < 1 else np.ones((n, m), dtype=bool)
    if spec.task_kind == CLASSIFICATION:
        if spec.threshold:
            scores = (probs >= 0.5).astype(np.float64)
        else:
            scores = (rng.random((n, m)) < probs).astype(np.float64)
    else:
        scores = np.clip(probs + rng.normal(0.0, spec.noise, (n, m)), 0.0, 1.0)
    dense = np.where(observed, scores, np.nan)
    responses = ResponseMatrix.from_dense(dense, task_kind=spec.task_kind)
    return SyntheticData(responses, planted, probs, skills)
