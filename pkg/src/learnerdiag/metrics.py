"""Prediction-quality and ranking metrics."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .data import CLASSIFICATION


def _pair(a, b, name: str):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"{name}: length mismatch {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError(f"{name}: empty input")
    return a, b


def accuracy(preds, labels, threshold: float = 0.5) -> float:
    p, y = _pair(preds, labels, "accuracy")
    return float(np.mean((p >= threshold) == (y == 1)))


def macro_f1(preds, labels, threshold: float = 0.5) -> float:
    """Unweighted mean of the F1 of class 1 and class 0.

    A class missing from both predictions and labels scores 0.
    """
    p, y = _pair(preds, labels, "macro_f1")
    hard = p >= threshold
    truth = y == 1
    scores = []
    present = 0
    for cls in (True, False):
        tp = np.sum((hard == cls) & (truth == cls))
        fp = np.sum((hard == cls) & (truth != cls))
        fn = np.sum((hard != cls) & (truth == cls))
        if tp + fp + fn > 0:
            present += 1
        scores.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
    if present == 0:
        raise ValueError("macro_f1: no class present")
    return float(np.mean(scores))


def auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative (ties 1/2)."""
    s, y = _pair(scores, labels, "auc")
    pos = y == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc: need at least one positive and one negative label")
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def rmse(preds, targets) -> float:
    p, t = _pair(preds, targets, "rmse")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae(preds, targets) -> float:
    p, t = _pair(preds, targets, "mae")
    return float(np.mean(np.abs(p - t)))


def _rank_pair(x, y, name: str):
    x, y = _pair(x, y, name)
    if x.size < 2:
        raise ValueError(f"{name}: need at least two observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError(f"{name}: undefined for an all-tied input")
    return x, y


def kendall_tau(x, y) -> float:
    """Kendall's tau-b."""
    x, y = _rank_pair(x, y, "kendall_tau")
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(x.size, k=1)
    dx, dy = dx[iu], dy[iu]
    s = int(np.sum(dx * dy))
    untied_x = int(np.count_nonzero(dx))
    untied_y = int(np.count_nonzero(dy))
    return float(s / np.sqrt(float(untied_x) * float(untied_y)))


def spearman_rho(x, y) -> float:
    x, y = _rank_pair(x, y, "spearman_rho")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(np.sum(rx * ry) / np.sqrt(np.sum(rx * rx) * np.sum(ry * ry)))


def jaccard_response_similarity(a, b) -> float:
    """Share of samples on which two learners' binary responses agree."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.shape != b.shape:
        raise ValueError("jaccard_response_similarity: responses cover different sample sets")
    if a.size == 0:
        raise ValueError("jaccard_response_similarity: empty input")
    return float(np.mean(a == b))


@dataclass
class MetricBundle:
    task_kind: str
    acc: Optional[float] = None
    f1_macro: Optional[float] = None
    auc: Optional[float] = None
    rmse: Optional[float] = None
    mae: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class RankCorrelation:
    kendall_tau: float
    spearman_rho: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(preds, targets, task_kind: str) -> MetricBundle:
    """ACC/F1/AUC/RMSE for classification, MAE/RMSE for regression.

    AUC is NaN when the targets hold a single class.
    """
    if task_kind == CLASSIFICATION:
        t = np.asarray(targets)
        has_both = 0 < np.sum(t == 1) < t.size
        return MetricBundle(task_kind, acc=accuracy(preds, targets), f1_macro=macro_f1(preds, targets),
                            auc=auc(preds, targets) if has_both else float("nan"),
                            rmse=rmse(preds, targets))
    return MetricBundle(task_kind, rmse=rmse(preds, targets), mae=mae(preds, targets))


def rank_correlation(x, y) -> RankCorrelation:
    return RankCorrelation(kendall_tau(x, y), spearman_rho(x, y), int(np.asarray(x).size))
