"""Diagnoser contract, the shared mini-batch training loop, and checkpoints."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .. import autograd as ag
from ..data import CLASSIFICATION, AbilityProfile, FitSummary, ResponseMatrix, SkillMatrix, normalize_task
from ..metrics import auc, rmse
from ..optim import AdamState, adam_step, project_nonnegative

CHECKPOINT_VERSION = 1


class ConfigError(ValueError):
    """Invalid diagnoser/task/hyperparameter combination."""


class NotFittedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 256
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    # called as on_step(model) after every optimizer step
    on_step: Optional[Callable] = None


def masked_overall(ability: np.ndarray, mask: np.ndarray) -> float:
    """Mean over samples of the mask-weighted mean of ``ability``.

    ``mask`` has one row per sample; each row is normalised by its sum.
    """
    mask = np.atleast_2d(np.asarray(mask, dtype=np.float64))
    per_sample = (mask @ np.asarray(ability, dtype=np.float64)) / mask.sum(axis=1)
    return float(np.mean(per_sample))


def _sigmoid(x):
    return ag._sigmoid(np.asarray(x, dtype=np.float64))


class Diagnoser:
    """Common surface: ``fit``, ``predict``, ``ability``.

    Subclasses set ``family``, ``space_kind`` and ``requires_skills``.
    """

    family = ""
    space_kind = "unidimensional"
    requires_skills = False
    trainable = False

    def __init__(self, n_learners: int, n_samples: int, skills: Optional[SkillMatrix] = None,
                 task_kind: str = CLASSIFICATION, seed: int = 0, **hparams):
        if n_learners < 1 or n_samples < 1:
            raise ConfigError("need at least one learner and one sample")
        if self.requires_skills and skills is None:
            raise ConfigError(f"{self.family} needs an explicit skill matrix")
        if skills is not None and skills.n_samples != n_samples:
            raise ConfigError(f"skill matrix has {skills.n_samples} rows for {n_samples} samples")
        self.n_learners = n_learners
        self.n_samples = n_samples
        self.skills = skills
        self.task_kind = normalize_task(task_kind)
        self.seed = seed
        self.hparams = dict(hparams)
        self.fitted = False

    # -- contract ---------------------------------------------------------

    def fit(self, train: ResponseMatrix, validation: Optional[ResponseMatrix] = None,
            config: Optional[TrainConfig] = None) -> FitSummary:
        raise NotImplementedError

    def predict(self, learners, samples) -> np.ndarray:
        li, sj = self._check_pairs(learners, samples)
        return self._predict(li, sj)

    def ability(self, learner: int, samples: Optional[Sequence[int]] = None) -> AbilityProfile:
        """Ability profile of one learner.

        ``samples`` restricts the overall summary to a subset of samples
        (default: every sample the model knows).
        """
        self._require_fitted()
        self._check_learner(learner)
        subset = self._sample_subset(samples)
        return AbilityProfile(int(learner), self._ability_vector(learner),
                              float(self._overall(learner, subset)), self.space_kind)

    def overall_abilities(self, samples: Optional[Sequence[int]] = None) -> np.ndarray:
        self._require_fitted()
        subset = self._sample_subset(samples)
        return np.array([self._overall(i, subset) for i in range(self.n_learners)])

    def sample_factors(self) -> Dict[str, np.ndarray]:
        """Per-sample ``difficulty`` in [0, 1] and ``discrimination`` (NaN if undefined)."""
        self._require_fitted()
        return self._sample_factors()

    # -- hooks ------------------------------------------------------------

    def _predict(self, li: np.ndarray, sj: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _ability_vector(self, learner: int) -> np.ndarray:
        raise NotImplementedError

    def _overall(self, learner: int, samples: np.ndarray) -> float:
        raise NotImplementedError

    def _sample_factors(self) -> Dict[str, np.ndarray]:
        raise NotImplementedError

    def get_state(self) -> Dict[str, np.ndarray]:
        raise NotImplementedError

    def set_state(self, state: Dict[str, np.ndarray]) -> None:
        raise NotImplementedError

    # -- helpers ----------------------------------------------------------

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise NotFittedError(f"{self.family} diagnoser has not been fitted")

    def _check_learner(self, learner: int) -> None:
        if not 0 <= int(learner) < self.n_learners:
            raise IndexError(f"learner {learner} out of range [0, {self.n_learners})")

    def _sample_subset(self, samples) -> np.ndarray:
        if samples is None:
            return np.arange(self.n_samples)
        subset = np.unique(np.asarray(samples, dtype=np.int64))
        if subset.size == 0:
            raise ValueError("sample subset is empty")
        if subset[0] < 0 or subset[-1] >= self.n_samples:
            raise IndexError("sample subset index out of range")
        return subset

    def _check_pairs(self, learners, samples):
        self._require_fitted()
        li = np.asarray(learners, dtype=np.int64).reshape(-1)
        sj = np.asarray(samples, dtype=np.int64).reshape(-1)
        if li.shape != sj.shape:
            raise ValueError("learner and sample id arrays differ in length")
        if li.size:
            if li.min() < 0 or li.max() >= self.n_learners:
                raise IndexError("learner index out of range")
            if sj.min() < 0 or sj.max() >= self.n_samples:
                raise IndexError("sample index out of range")
        return li, sj

    def _check_train(self, train: ResponseMatrix) -> None:
        if len(train) == 0:
            raise ValueError("training set is empty")
        if train.n_learners > self.n_learners or train.n_samples > self.n_samples:
            raise IndexError("training data refers to more learners/samples than the model holds")

    def _q_rows(self) -> np.ndarray:
        return self.skills.q


class GradientDiagnoser(Diagnoser):
    """Diagnoser whose parameters are trained with Adam on BCE or MSE."""

    trainable = True
    nonnegative: Sequence[str] = ()

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.params: Dict[str, ag.Tensor] = {}
        self._build(np.random.default_rng(self.seed))

    def _build(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def _add_param(self, name: str, rows: int, cols: int, rng: np.random.Generator,
                   kind: str = "uniform") -> None:
        """Register a table. ``uniform`` draws U[-s, s] with s = 1/sqrt(rows);
        ``positive`` draws U[0, s]; ``zeros`` is all zero."""
        s = 1.0 / np.sqrt(rows)
        if kind == "uniform":
            value = rng.uniform(-s, s, size=(rows, cols))
        elif kind == "positive":
            value = rng.uniform(0.0, s, size=(rows, cols))
        elif kind == "zeros":
            value = np.zeros((rows, cols))
        else:
            raise ValueError(kind)
        self.params[name] = ag.parameter(value, name=name)

    def _forward(self, li: np.ndarray, sj: np.ndarray) -> ag.Tensor:
        """Predicted scores as a ``(batch, 1)`` tensor."""
        raise NotImplementedError

    def _penalty(self, li: np.ndarray, sj: np.ndarray) -> Optional[ag.Tensor]:
        return None

    def loss(self, li: np.ndarray, sj: np.ndarray, y: np.ndarray) -> ag.Tensor:
        pred = self._forward(li, sj)
        if self.task_kind == CLASSIFICATION:
            out = ag.bce_loss(pred, y)
        else:
            out = ag.mse_loss(pred, y)
        extra = self._penalty(li, sj)
        return out if extra is None else ag.add(out, extra)

    def _predict(self, li, sj):
        with ag.no_grad():
            return self._forward(li, sj).value.reshape(-1).copy()

    def get_state(self):
        return {k: p.value.copy() for k, p in self.params.items()}

    def set_state(self, state):
        for k, p in self.params.items():
            arr = np.asarray(state[k], dtype=np.float64).reshape(p.value.shape)
            p.value[...] = arr

    def fit(self, train, validation=None, config=None):
        config = config or TrainConfig()
        self._check_train(train)
        summary = FitSummary()
        rng = np.random.default_rng(config.seed)
        params = list(self.params.values())
        state = AdamState.for_params(params, lr=config.lr)
        nonneg = [self.params[n] for n in self.nonnegative]
        li_all, sj_all, y_all = train.learners, train.samples, train.scores
        n = len(train)
        use_val = validation is not None and len(validation) > 0
        best_score, best_state, since_best = -np.inf, None, 0
        self.fitted = True

        for epoch in range(config.max_epochs):
            perm = rng.permutation(n)
            total = 0.0
            for b, start in enumerate(range(0, n, config.batch_size)):
                idx = perm[start:start + config.batch_size]
                try:
                    # non-finite values are caught by the engine; skip numpy's warning
                    with np.errstate(over="ignore", invalid="ignore"):
                        loss = self.loss(li_all[idx], sj_all[idx], y_all[idx])
                except FloatingPointError as exc:
                    raise FloatingPointError(
                        f"{self.family}: {exc} at epoch {epoch}, batch {b}; "
                        f"try a smaller learning rate (lr={config.lr})") from None
                ag.backward(loss)
                adam_step(params, state)
                project_nonnegative(nonneg)
                if config.on_step is not None:
                    config.on_step(self)
                total += loss.item() * len(idx)
            summary.train_loss.append(total / n)
            summary.epochs_run = epoch + 1
            if not use_val:
                summary.best_epoch = epoch
                continue
            name, value, score = self._validation_score(validation)
            summary.val_metric_name = name
            summary.val_metric.append(value)
            if score > best_score:
                best_score, best_state, since_best = score, self.get_state(), 0
                summary.best_epoch = epoch
            else:
                since_best += 1
                if since_best >= config.patience:
                    break
        if best_state is not None:
            self.set_state(best_state)
        return summary

    def _validation_score(self, validation: ResponseMatrix):
        """(metric name, metric value, higher-is-better score)."""
        pred = self._predict(validation.learners, validation.samples)
        return selection_score(pred, validation.scores, self.task_kind)


def selection_score(pred, target, task_kind: str):
    """Model-selection metric: AUC for classification, RMSE for regression.

    Falls back to RMSE when the classification targets hold a single class.
    """
    if task_kind == CLASSIFICATION:
        t = np.asarray(target)
        if 0 < np.sum(t == 1) < t.size:
            value = auc(pred, t)
            return "auc", value, value
    value = rmse(pred, target)
    return "rmse", value, -value


# -- checkpoints ---------------------------------------------------------------

def save_checkpoint(model: Diagnoser, path) -> None:
    model._require_fitted()
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "family": model.family,
        "n_learners": model.n_learners,
        "n_samples": model.n_samples,
        "task_kind": model.task_kind,
        "seed": model.seed,
        "hparams": model.hparams,
        "skills": None if model.skills is None else {
            "q": model.skills.q.astype(int).tolist(), "names": list(model.skills.skill_names)},
        "params": {k: {"shape": list(v.shape), "values": v.reshape(-1).tolist()}
                   for k, v in model.get_state().items()},
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path) -> Diagnoser:
    from . import make_diagnoser

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    skills = None
    if doc["skills"] is not None:
        skills = SkillMatrix(np.array(doc["skills"]["q"], dtype=np.float64), doc["skills"]["names"])
    model = make_diagnoser(doc["family"], doc["n_learners"], doc["n_samples"], skills=skills,
                           task_kind=doc["task_kind"], seed=doc["seed"], **doc["hparams"])
    model.set_state({k: np.array(v["values"], dtype=np.float64).reshape(v["shape"])
                     for k, v in doc["params"].items()})
    model.fitted = True
    return model
