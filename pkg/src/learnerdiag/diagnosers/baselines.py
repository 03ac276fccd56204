"""Mean-score diagnosers: per learner, or per learner and skill."""
from __future__ import annotations

import numpy as np

from ..data import FitSummary
from .base import Diagnoser, masked_overall


class _CountingDiagnoser(Diagnoser):
    def _fit_counts(self, train):
        self._check_train(train)
        self.global_mean = float(sum(train.scores.tolist()) / len(train))
        self.learner_sum = np.bincount(train.learners, weights=train.scores, minlength=self.n_learners)
        self.learner_count = np.bincount(train.learners, minlength=self.n_learners).astype(np.float64)
        self.sample_sum = np.bincount(train.samples, weights=train.scores, minlength=self.n_samples)
        self.sample_count = np.bincount(train.samples, minlength=self.n_samples).astype(np.float64)
        summary = FitSummary(epochs_run=0)
        unseen = np.nonzero(self.learner_count == 0)[0]
        if len(unseen):
            summary.flags.append(f"{len(unseen)} learner(s) without training triples use the global mean")
        return summary

    def learner_mean(self, learner: int) -> float:
        c = self.learner_count[learner]
        return float(self.learner_sum[learner] / c) if c > 0 else self.global_mean

    def _sample_factors(self):
        seen = self.sample_count > 0
        mean = np.full(self.n_samples, self.global_mean)
        mean[seen] = self.sample_sum[seen] / self.sample_count[seen]
        return {"difficulty": 1.0 - mean, "discrimination": np.full(self.n_samples, np.nan)}

    def get_state(self):
        state = {"global_mean": np.array([self.global_mean]),
                 "learner_sum": self.learner_sum, "learner_count": self.learner_count,
                 "sample_sum": self.sample_sum, "sample_count": self.sample_count}
        return {k: np.array(v, dtype=np.float64) for k, v in state.items()}

    def set_state(self, state):
        self.global_mean = float(np.asarray(state["global_mean"]).reshape(-1)[0])
        for key in ("learner_sum", "learner_count", "sample_sum", "sample_count"):
            setattr(self, key, np.asarray(state[key], dtype=np.float64).reshape(-1))


class Vanilla(_CountingDiagnoser):
    """Predicts each learner's mean training score for every sample."""

    family = "vanilla"
    space_kind = "unidimensional"

    def fit(self, train, validation=None, config=None):
        summary = self._fit_counts(train)
        self.fitted = True
        return summary

    def _predict(self, li, sj):
        means = [self.learner_mean(i) for i in range(self.n_learners)]
        return np.array([means[i] for i in li.tolist()], dtype=np.float64)

    def _ability_vector(self, learner):
        return np.array([self.learner_mean(learner)])

    def _overall(self, learner, samples):
        return self.learner_mean(learner)


class SkillVanilla(_CountingDiagnoser):
    """Mean of the learner's per-skill mean scores over the sample's skills.

    Skills the learner was never scored on are skipped; with none left the
    learner's overall mean is used.
    """

    family = "skill_vanilla"
    space_kind = "explicit-skill"
    requires_skills = True

    def fit(self, train, validation=None, config=None):
        summary = self._fit_counts(train)
        q = self.skills.q
        k = q.shape[1]
        self.skill_sum = np.zeros((self.n_learners, k))
        self.skill_count = np.zeros((self.n_learners, k))
        for i, j, s in zip(train.learners.tolist(), train.samples.tolist(), train.scores.tolist()):
            for kk in np.nonzero(q[j])[0].tolist():
                self.skill_sum[i, kk] += s
                self.skill_count[i, kk] += 1
        self.fitted = True
        return summary

    def skill_means(self, learner: int) -> list:
        """Per-skill means of one learner; ``None`` where the skill is unseen."""
        return [self.skill_sum[learner, k] / c if c > 0 else None
                for k, c in enumerate(self.skill_count[learner].tolist())]

    def _predict(self, li, sj):
        cache = {}
        skills_of = [np.nonzero(row)[0].tolist() for row in self.skills.q]
        out = np.empty(li.size)
        for n, (i, j) in enumerate(zip(li.tolist(), sj.tolist())):
            if i not in cache:
                cache[i] = self.skill_means(i)
            means = [cache[i][k] for k in skills_of[j] if cache[i][k] is not None]
            out[n] = sum(means) / len(means) if means else self.learner_mean(i)
        return out

    def _ability_vector(self, learner):
        fallback = self.learner_mean(learner)
        return np.array([fallback if m is None else m for m in self.skill_means(learner)])

    def _overall(self, learner, samples):
        return masked_overall(self._ability_vector(learner), self.skills.q[samples])

    def get_state(self):
        state = super().get_state()
        state["skill_sum"] = self.skill_sum.copy()
        state["skill_count"] = self.skill_count.copy()
        return state

    def set_state(self, state):
        super().set_state(state)
        k = self.skills.n_skills
        self.skill_sum = np.asarray(state["skill_sum"], dtype=np.float64).reshape(self.n_learners, k)
        self.skill_count = np.asarray(state["skill_count"], dtype=np.float64).reshape(self.n_learners, k)
