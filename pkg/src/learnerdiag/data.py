"""Response logs, skill matrices, splits and ability profiles."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASK_KINDS = (CLASSIFICATION, REGRESSION)
_TASK_ALIASES = {"cls": CLASSIFICATION, "reg": REGRESSION,
                 CLASSIFICATION: CLASSIFICATION, REGRESSION: REGRESSION}

# seeds for the ten repeated runs
DEFAULT_SEEDS = (1, 21, 42, 84, 168, 336, 672, 1344, 2688, 5376)


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


def normalize_task(kind: str) -> str:
    try:
        return _TASK_ALIASES[kind]
    except KeyError:
        raise DataError(f"unknown task kind {kind!r}; expected one of cls, reg") from None


@dataclass(frozen=True)
class ResponseMatrix:
    """Sparse (learner, sample, score) triples over dense integer ids.

    ``learner_names[i]`` / ``sample_names[j]`` give the external names of
    learner ``i`` and sample ``j``.
    """

    learners: np.ndarray
    samples: np.ndarray
    scores: np.ndarray
    learner_names: Tuple[str, ...]
    sample_names: Tuple[str, ...]
    task_kind: str = CLASSIFICATION

    def __post_init__(self):
        learners = np.asarray(self.learners, dtype=np.int64).reshape(-1)
        samples = np.asarray(self.samples, dtype=np.int64).reshape(-1)
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        for arr in (learners, samples, scores):
            arr.setflags(write=False)
        object.__setattr__(self, "learners", learners)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "learner_names", tuple(self.learner_names))
        object.__setattr__(self, "sample_names", tuple(self.sample_names))
        object.__setattr__(self, "task_kind", normalize_task(self.task_kind))
        self._validate()

    def _validate(self) -> None:
        n = len(self.scores)
        if len(self.learners) != n or len(self.samples) != n:
            raise DataError("learner, sample and score arrays differ in length")
        if len(set(self.learner_names)) != len(self.learner_names):
            raise DataError("learner names are not unique")
        if len(set(self.sample_names)) != len(self.sample_names):
            raise DataError("sample names are not unique")
        if n == 0:
            return
        if self.learners.min() < 0 or self.learners.max() >= self.n_learners:
            raise DataError("learner index out of range")
        if self.samples.min() < 0 or self.samples.max() >= self.n_samples:
            raise DataError("sample index out of range")
        if not np.all(np.isfinite(self.scores)) or self.scores.min() < 0 or self.scores.max() > 1:
            raise DataError("scores must lie in [0, 1]")
        if self.task_kind == CLASSIFICATION and not np.all((self.scores == 0) | (self.scores == 1)):
            raise DataError("classification scores must be 0 or 1")
        keys = self.learners * self.n_samples + self.samples
        if len(np.unique(keys)) != n:
            raise DataError("duplicate (learner, sample) pair")

    @property
    def n_learners(self) -> int:
        return len(self.learner_names)

    @property
    def n_samples(self) -> int:
        return len(self.sample_names)

    def __len__(self) -> int:
        return len(self.scores)

    @classmethod
    def from_triples(cls, triples: Sequence[Tuple[int, int, float]], n_learners: int,
                     n_samples: int, task_kind: str = CLASSIFICATION) -> "ResponseMatrix":
        arr = np.array(triples, dtype=np.float64).reshape(-1, 3)
        return cls(
            learners=arr[:, 0].astype(np.int64),
            samples=arr[:, 1].astype(np.int64),
            scores=arr[:, 2],
            learner_names=[f"learner_{i}" for i in range(n_learners)],
            sample_names=[f"sample_{j}" for j in range(n_samples)],
            task_kind=task_kind,
        )

    @classmethod
    def from_dense(cls, matrix, task_kind: str = CLASSIFICATION) -> "ResponseMatrix":
        """Build from an N x M array; NaN cells are treated as missing."""
        dense = np.asarray(matrix, dtype=np.float64)
        li, sj = np.nonzero(~np.isnan(dense))
        return cls(li, sj, dense[li, sj],
                   [f"learner_{i}" for i in range(dense.shape[0])],
                   [f"sample_{j}" for j in range(dense.shape[1])], task_kind)

    def subset(self, index) -> "ResponseMatrix":
        idx = np.asarray(index, dtype=np.int64)
        return ResponseMatrix(self.learners[idx], self.samples[idx], self.scores[idx],
                              self.learner_names, self.sample_names, self.task_kind)

    def restrict_samples(self, sample_ids) -> "ResponseMatrix":
        """Triples whose sample is in ``sample_ids``; ids and names are kept."""
        keep = np.isin(self.samples, np.asarray(sample_ids, dtype=np.int64))
        return self.subset(np.nonzero(keep)[0])

    def triples(self):
        return list(zip(self.learners.tolist(), self.samples.tolist(), self.scores.tolist()))

    def to_dense(self) -> np.ndarray:
        dense = np.full((self.n_learners, self.n_samples), np.nan)
        dense[self.learners, self.samples] = self.scores
        return dense

    def learner_means(self) -> np.ndarray:
        """Mean score per learner; NaN for learners with no triples."""
        sums = np.bincount(self.learners, weights=self.scores, minlength=self.n_learners)
        counts = np.bincount(self.learners, minlength=self.n_learners).astype(np.float64)
        out = np.full(self.n_learners, np.nan)
        seen = counts > 0
        out[seen] = sums[seen] / counts[seen]
        return out


@dataclass(frozen=True)
class SkillMatrix:
    """Binary sample x skill relevance matrix (the Q-matrix)."""

    q: np.ndarray
    skill_names: Tuple[str, ...] = ()

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        if q.ndim != 2:
            raise DataError(f"skill matrix must be 2-D, got shape {q.shape}")
        if not np.all((q == 0) | (q == 1)):
            raise DataError("skill matrix entries must be 0 or 1")
        empty = np.nonzero(q.sum(axis=1) == 0)[0]
        if len(empty):
            raise DataError(f"sample row {int(empty[0])} has no skill")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        names = tuple(self.skill_names) or tuple(f"skill_{k + 1}" for k in range(q.shape[1]))
        if len(names) != q.shape[1]:
            raise DataError("skill name count does not match matrix width")
        object.__setattr__(self, "skill_names", names)

    @property
    def n_samples(self) -> int:
        return self.q.shape[0]

    @property
    def n_skills(self) -> int:
        return self.q.shape[1]

    def skills_of(self, sample: int) -> np.ndarray:
        return np.nonzero(self.q[sample])[0]


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


@dataclass
class AbilityProfile:
    learner: int
    ability: np.ndarray
    overall: float
    space_kind: str  # explicit-skill | latent-skill | unidimensional

    def to_dict(self) -> dict:
        return {"learner": self.learner, "ability": [float(a) for a in self.ability],
                "overall": float(self.overall), "space_kind": self.space_kind}


@dataclass
class FitSummary:
    train_loss: list = field(default_factory=list)
    val_metric: list = field(default_factory=list)
    best_epoch: Optional[int] = None
    epochs_run: int = 0
    val_metric_name: str = ""
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "train_loss": [float(x) for x in self.train_loss],
            "val_metric": [float(x) for x in self.val_metric],
            "val_metric_name": self.val_metric_name,
            "best_epoch": self.best_epoch,
            "epochs_run": self.epochs_run,
            "flags": list(self.flags),
        }
