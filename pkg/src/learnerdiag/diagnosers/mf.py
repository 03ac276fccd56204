"""Probabilistic matrix factorisation diagnoser."""
from __future__ import annotations

import numpy as np

from .. import autograd as ag
from .base import GradientDiagnoser, _sigmoid


class MF(GradientDiagnoser):
    """sigmoid(u_i . v_j), with an L2 penalty ``l2_weight`` on the looked-up rows."""

    family = "mf"
    space_kind = "latent-skill"

    def _build(self, rng):
        dim = int(self.hparams.get("latent_skills", 5))
        self.l2_weight = float(self.hparams.get("l2_weight", 1e-4))
        if dim < 1:
            raise ValueError("latent_skills must be >= 1")
        if self.l2_weight < 0:
            raise ValueError("l2_weight must be >= 0")
        self._add_param("u", self.n_learners, dim, rng)
        self._add_param("v", self.n_samples, dim, rng)

    def _forward(self, li, sj):
        u = ag.row_lookup(self.params["u"], li)
        v = ag.row_lookup(self.params["v"], sj)
        return ag.sigmoid(ag.sum_row(ag.elementwise_mul(u, v)))

    def _penalty(self, li, sj):
        if self.l2_weight == 0:
            return None
        u = ag.row_lookup(self.params["u"], li)
        v = ag.row_lookup(self.params["v"], sj)
        sq = ag.add(ag.sum_all(ag.elementwise_mul(u, u)), ag.sum_all(ag.elementwise_mul(v, v)))
        return ag.scalar_mul(sq, self.l2_weight / len(li))

    def _predicted_matrix(self, samples) -> np.ndarray:
        return _sigmoid(self.params["u"].value @ self.params["v"].value[samples].T)

    def _ability_vector(self, learner):
        return self.params["u"].value[learner].copy()

    def _overall(self, learner, samples):
        # no monotone ability axis: summarise by the mean predicted score
        u = self.params["u"].value[learner]
        return float(np.mean(_sigmoid(self.params["v"].value[samples] @ u)))

    def _sample_factors(self):
        probs = self._predicted_matrix(np.arange(self.n_samples))
        return {"difficulty": 1.0 - probs.mean(axis=0),
                "discrimination": np.full(self.n_samples, np.nan)}
