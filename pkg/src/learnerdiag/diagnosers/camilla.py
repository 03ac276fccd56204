"""Camilla-Base (explicit skills) and Camilla (latent skill masks + MLP)."""
from __future__ import annotations

import numpy as np

from .. import autograd as ag
from .base import GradientDiagnoser, _sigmoid, masked_overall
from .neural import MonotoneHead, _hidden


def camilla_base_probability(ability, difficulty, discrimination, q_row):
    """sigmoid(sum_k q_k * disc_k * (ability_k - difficulty)).

    ``discrimination`` is the effective (already positive) value.
    """
    mask = np.asarray(q_row) * np.asarray(discrimination)
    return _sigmoid(np.dot(mask, np.asarray(ability) - difficulty))


def subset_ability(ability, skill_masks) -> float:
    """Ability weighted by the average skill mask of a subset of samples."""
    masks = np.atleast_2d(np.asarray(skill_masks, dtype=np.float64))
    if masks.shape[0] == 0:
        raise ValueError("sample subset is empty")
    return float(np.dot(masks.mean(axis=0), np.asarray(ability, dtype=np.float64)))


class CamillaBase(GradientDiagnoser):
    """Explicit-skill diagnoser.

    Tables: ``W_A`` (learner x skill), ``W_D`` (sample x 1) and ``W_b``
    (sample x skill, pre-softplus unless ``raw_discrimination``).
    """

    family = "camilla_base"
    space_kind = "explicit-skill"
    requires_skills = True

    def _build(self, rng):
        self.raw_discrimination = bool(self.hparams.get("raw_discrimination", False))
        k = self.skills.n_skills
        self._add_param("W_A", self.n_learners, k, rng)
        self._add_param("W_D", self.n_samples, 1, rng)
        self._add_param("W_b", self.n_samples, k, rng)
        self._q = ag.Tensor(self.skills.q)

    def discrimination(self) -> np.ndarray:
        b = self.params["W_b"].value
        return b.copy() if self.raw_discrimination else np.logaddexp(0.0, b)

    def _forward(self, li, sj):
        a = ag.row_lookup(self.params["W_A"], li)
        d = ag.row_lookup(self.params["W_D"], sj)
        b = ag.row_lookup(self.params["W_b"], sj)
        if not self.raw_discrimination:
            b = ag.softplus(b)
        mask = ag.elementwise_mul(ag.row_lookup(self._q, sj), b)
        return ag.sigmoid(ag.sum_row(ag.elementwise_mul(mask, ag.sub(a, d))))

    def _ability_vector(self, learner):
        return _sigmoid(self.params["W_A"].value[learner])

    def _overall(self, learner, samples):
        return masked_overall(self._ability_vector(learner), self.skills.q[samples])

    def _sample_factors(self):
        q = self.skills.q
        return {"difficulty": _sigmoid(self.params["W_D"].value[:, 0]),
                "discrimination": (q * self.discrimination()).sum(axis=1) / q.sum(axis=1)}


class Camilla(GradientDiagnoser):
    """Latent-skill diagnoser; no Q-matrix needed.

    Y_ij = Q'_j * (A'_i - D'_j) * b'_j feeds a non-negative MLP, where
    A' = sigmoid(W_A), Q' = softmax(W_Q), D' = sigmoid(W_D), b' = sigmoid(W_b).
    Hyperparameters: ``latent_skills`` (K'), ``ld1``, ``ld2``.
    """

    family = "camilla"
    space_kind = "latent-skill"

    def _build(self, rng):
        dim = int(self.hparams.get("latent_skills", 5))
        if dim < 1:
            raise ValueError("latent_skills must be >= 1")
        self._add_param("W_A", self.n_learners, dim, rng)
        self._add_param("W_Q", self.n_samples, dim, rng)
        self._add_param("W_D", self.n_samples, dim, rng)
        self._add_param("W_b", self.n_samples, 1, rng)
        self.head = MonotoneHead(self, dim, _hidden(self.hparams), rng)
        self.nonnegative = tuple(self.head.weight_names)

    def interaction(self, li, sj) -> ag.Tensor:
        a = ag.sigmoid(ag.row_lookup(self.params["W_A"], li))
        q = ag.softmax_row(ag.row_lookup(self.params["W_Q"], sj))
        d = ag.sigmoid(ag.row_lookup(self.params["W_D"], sj))
        b = ag.sigmoid(ag.row_lookup(self.params["W_b"], sj))
        return ag.elementwise_mul(ag.elementwise_mul(q, ag.sub(a, d)), b)

    def _forward(self, li, sj):
        return self.head(self.interaction(li, sj))

    def skill_masks(self, samples=None) -> np.ndarray:
        w = self.params["W_Q"].value if samples is None else self.params["W_Q"].value[np.asarray(samples)]
        e = np.exp(w - w.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def subset_ability(self, learner: int, samples) -> float:
        self._require_fitted()
        self._check_learner(learner)
        samples = np.asarray(samples, dtype=np.int64).reshape(-1)
        if samples.size == 0:
            raise ValueError("sample subset is empty")
        return subset_ability(self._ability_vector(learner), self.skill_masks(samples))

    def _ability_vector(self, learner):
        return _sigmoid(self.params["W_A"].value[learner])

    def _overall(self, learner, samples):
        return subset_ability(self._ability_vector(learner), self.skill_masks(samples))

    def _sample_factors(self):
        masks = self.skill_masks()
        return {"difficulty": (masks * _sigmoid(self.params["W_D"].value)).sum(axis=1),
                "discrimination": _sigmoid(self.params["W_b"].value[:, 0])}
