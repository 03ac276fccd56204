"""Two-parameter IRT and its multidimensional extension."""
from __future__ import annotations

import numpy as np

from .. import autograd as ag
from .base import GradientDiagnoser, _sigmoid

IRT_SCALE = 1.7


def irt_probability(a, d, k):
    """P(correct) = sigmoid(1.7 * k * (a - d))."""
    return _sigmoid(IRT_SCALE * np.asarray(k) * (np.asarray(a) - np.asarray(d)))


def mirt_probability(theta, k, d):
    """P(correct) = sigmoid(k . theta - d)."""
    return _sigmoid(np.dot(np.asarray(k), np.asarray(theta)) - np.asarray(d))


def _positive(t: ag.Tensor, raw: bool) -> ag.Tensor:
    return t if raw else ag.softplus(t)


class IRT(GradientDiagnoser):
    """Per-learner ability ``a``; per-sample difficulty ``d`` and discrimination ``k``.

    ``k`` is stored pre-softplus unless ``raw_discrimination=True``.
    """

    family = "irt"
    space_kind = "unidimensional"

    def _build(self, rng):
        self.raw_discrimination = bool(self.hparams.get("raw_discrimination", False))
        self._add_param("a", self.n_learners, 1, rng)
        self._add_param("d", self.n_samples, 1, rng)
        self._add_param("k", self.n_samples, 1, rng)

    def discrimination(self) -> np.ndarray:
        k = self.params["k"].value[:, 0]
        return k.copy() if self.raw_discrimination else np.logaddexp(0.0, k)

    def _forward(self, li, sj):
        a = ag.row_lookup(self.params["a"], li)
        d = ag.row_lookup(self.params["d"], sj)
        k = _positive(ag.row_lookup(self.params["k"], sj), self.raw_discrimination)
        return ag.sigmoid(ag.scalar_mul(ag.elementwise_mul(k, ag.sub(a, d)), IRT_SCALE))

    def _ability_vector(self, learner):
        return self.params["a"].value[learner].copy()

    def _overall(self, learner, samples):
        return float(_sigmoid(self.params["a"].value[learner, 0]))

    def _sample_factors(self):
        return {"difficulty": _sigmoid(self.params["d"].value[:, 0]),
                "discrimination": self.discrimination()}


class MIRT(GradientDiagnoser):
    """sigmoid(k_j . theta_i - d_j) with ``latent_skills`` dimensions."""

    family = "mirt"
    space_kind = "latent-skill"

    def _build(self, rng):
        self.raw_discrimination = bool(self.hparams.get("raw_discrimination", False))
        dim = int(self.hparams.get("latent_skills", 5))
        if dim < 1:
            raise ValueError("latent_skills must be >= 1")
        self._add_param("theta", self.n_learners, dim, rng)
        self._add_param("k", self.n_samples, dim, rng)
        self._add_param("d", self.n_samples, 1, rng)

    def discrimination(self) -> np.ndarray:
        k = self.params["k"].value
        return k.copy() if self.raw_discrimination else np.logaddexp(0.0, k)

    def _forward(self, li, sj):
        theta = ag.row_lookup(self.params["theta"], li)
        k = _positive(ag.row_lookup(self.params["k"], sj), self.raw_discrimination)
        d = ag.row_lookup(self.params["d"], sj)
        return ag.sigmoid(ag.sub(ag.sum_row(ag.elementwise_mul(k, theta)), d))

    def _ability_vector(self, learner):
        return self.params["theta"].value[learner].copy()

    def _overall(self, learner, samples):
        # discrimination acts as a soft skill mask over sigmoid-scaled theta
        weights = np.abs(self.discrimination()[samples])
        weights = weights + (weights.sum(axis=1, keepdims=True) == 0)
        return float(np.mean(weights @ _sigmoid(self.params["theta"].value[learner]) / weights.sum(axis=1)))

    def _sample_factors(self):
        return {"difficulty": _sigmoid(self.params["d"].value[:, 0]),
                "discrimination": self.discrimination().mean(axis=1)}
