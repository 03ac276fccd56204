"""Shared non-negative MLP head and the NeuralCD diagnoser."""
from __future__ import annotations

from typing import List, Sequence

from .. import autograd as ag
from .base import GradientDiagnoser, _sigmoid, masked_overall


class MonotoneHead:
    """Sigmoid MLP mapping a diagnostic vector to a probability.

    Weights live in the owning diagnoser's ``params`` as ``W_1, b_1, ...``
    and are kept non-negative by projection after each step, which makes
    the output non-decreasing in every input coordinate.
    """

    def __init__(self, owner: GradientDiagnoser, in_dim: int, hidden: Sequence[int], rng):
        sizes = [in_dim, *hidden, 1]
        self.weight_names: List[str] = []
        self.bias_names: List[str] = []
        for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
            owner._add_param(f"W_{layer}", fan_in, fan_out, rng, kind="positive")
            owner._add_param(f"b_{layer}", 1, fan_out, rng, kind="zeros")
            self.weight_names.append(f"W_{layer}")
            self.bias_names.append(f"b_{layer}")
        self.owner = owner

    def __call__(self, x: ag.Tensor) -> ag.Tensor:
        params = self.owner.params
        h = x
        for w, b in zip(self.weight_names, self.bias_names):
            h = ag.sigmoid(ag.add(ag.matmul(h, params[w]), params[b]))
        return h


def _hidden(hparams) -> tuple:
    return int(hparams.get("ld1", 128)), int(hparams.get("ld2", 64))


class NeuralCD(GradientDiagnoser):
    """MLP over Q_j * (a_i - d_j) * k_j with a, d, k squashed to (0, 1)."""

    family = "neuralcd"
    space_kind = "explicit-skill"
    requires_skills = True

    def _build(self, rng):
        k = self.skills.n_skills
        self._add_param("W_a", self.n_learners, k, rng)
        self._add_param("W_d", self.n_samples, k, rng)
        self._add_param("W_k", self.n_samples, 1, rng)
        self.head = MonotoneHead(self, k, _hidden(self.hparams), rng)
        self.nonnegative = tuple(self.head.weight_names)
        self._q = ag.Tensor(self.skills.q)

    def _forward(self, li, sj):
        a = ag.sigmoid(ag.row_lookup(self.params["W_a"], li))
        d = ag.sigmoid(ag.row_lookup(self.params["W_d"], sj))
        k = ag.sigmoid(ag.row_lookup(self.params["W_k"], sj))
        q = ag.row_lookup(self._q, sj)
        x = ag.elementwise_mul(ag.elementwise_mul(q, ag.sub(a, d)), k)
        return self.head(x)

    def _ability_vector(self, learner):
        return _sigmoid(self.params["W_a"].value[learner])

    def _overall(self, learner, samples):
        return masked_overall(self._ability_vector(learner), self.skills.q[samples])

    def _sample_factors(self):
        q = self.skills.q
        d = _sigmoid(self.params["W_d"].value)
        return {"difficulty": (q * d).sum(axis=1) / q.sum(axis=1),
                "discrimination": _sigmoid(self.params["W_k"].value[:, 0])}
