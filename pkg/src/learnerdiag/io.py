"""Reading and writing response logs and skill matrices, plus splitting.

File formats::

    responses.jsonl       {"learner": str, "sample": str, "score": float}
    raw_regression.jsonl  {"learner": str, "sample": str, "abs_error": float}
    q_matrix.csv          sample,skill_1,...,skill_K  (cells 0/1)

Ids are interned in first-appearance order.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .data import (CLASSIFICATION, REGRESSION, DataError, DatasetSplit,
                   ResponseMatrix, SkillMatrix, normalize_task)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class RawRegressionLog:
    triples: Tuple[Tuple[str, str, float], ...]

    def __post_init__(self):
        for learner, sample, err in self.triples:
            if not math.isfinite(err) or err < 0:
                raise DataError(f"absolute error for ({learner}, {sample}) must be finite and >= 0, got {err}")


class _Interner:
    def __init__(self):
        self.index: Dict[str, int] = {}

    def __call__(self, name: str) -> int:
        if name not in self.index:
            self.index[name] = len(self.index)
        return self.index[name]

    @property
    def names(self) -> List[str]:
        return list(self.index)


def _read_jsonl(path: PathLike, value_key: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                learner, sample = obj["learner"], obj["sample"]
                value = float(obj[value_key])
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed line ({exc})") from None
            if not isinstance(learner, str) or not isinstance(sample, str):
                raise DataError(f"{path}:{lineno}: learner and sample must be strings")
            yield lineno, learner, sample, value


def load_response_logs(path: PathLike, task_kind: str = CLASSIFICATION) -> ResponseMatrix:
    task_kind = normalize_task(task_kind)
    learners, samples = _Interner(), _Interner()
    rows, seen = [], set()
    for lineno, learner, sample, score in _read_jsonl(path, "score"):
        if not (0.0 <= score <= 1.0):
            raise DataError(f"{path}:{lineno}: score {score} outside [0, 1]")
        if task_kind == CLASSIFICATION and score not in (0.0, 1.0):
            raise DataError(f"{path}:{lineno}: classification score must be 0 or 1, got {score}")
        key = (learner, sample)
        if key in seen:
            raise DataError(f"{path}:{lineno}: duplicate pair ({learner}, {sample})")
        seen.add(key)
        rows.append((learners(learner), samples(sample), score))
    arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return ResponseMatrix(arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2],
                          learners.names, samples.names, task_kind)


def save_response_logs(matrix: ResponseMatrix, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, s in matrix.triples():
            fh.write(json.dumps({"learner": matrix.learner_names[i],
                                 "sample": matrix.sample_names[j], "score": s}) + "\n")


def load_raw_regression(path: PathLike) -> RawRegressionLog:
    triples = []
    for lineno, learner, sample, err in _read_jsonl(path, "abs_error"):
        if not math.isfinite(err) or err < 0:
            raise DataError(f"{path}:{lineno}: abs_error must be finite and >= 0, got {err}")
        triples.append((learner, sample, err))
    return RawRegressionLog(tuple(triples))


def regression_scores(raw: RawRegressionLog) -> ResponseMatrix:
    """Turn absolute errors into scores: 1 - per-sample min-max normalized error.

    Min and max run over the learners observed on each sample. When every
    observed error on a sample is equal, all those learners score 1.0.
    """
    learners, samples = _Interner(), _Interner()
    li, sj, err = [], [], []
    seen = set()
    for learner, sample, e in raw.triples:
        if (learner, sample) in seen:
            raise DataError(f"duplicate pair ({learner}, {sample})")
        seen.add((learner, sample))
        li.append(learners(learner))
        sj.append(samples(sample))
        err.append(e)
    li, sj, err = np.array(li, dtype=np.int64), np.array(sj, dtype=np.int64), np.array(err, dtype=np.float64)
    n_samples = len(samples.index)
    lo = np.full(n_samples, np.inf)
    hi = np.full(n_samples, -np.inf)
    np.minimum.at(lo, sj, err)
    np.maximum.at(hi, sj, err)
    span = hi[sj] - lo[sj]
    scores = np.ones_like(err)
    varied = span > 0
    scores[varied] = 1.0 - (err[varied] - lo[sj][varied]) / span[varied]
    return ResponseMatrix(li, sj, np.clip(scores, 0.0, 1.0), learners.names, samples.names, REGRESSION)


def load_skill_matrix(path: PathLike, sample_names: Sequence[str] = None) -> SkillMatrix:
    """Read a Q-matrix CSV.

    With ``sample_names`` given, rows are reordered to match those samples;
    every listed sample must have a row and no unknown sample may appear.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty skill matrix file") from None
        if len(header) < 2:
            raise DataError(f"{path}: header needs a sample column and at least one skill")
        skills = header[1:]
        rows: Dict[str, List[float]] = {}
        order: List[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            name, cells = row[0], row[1:]
            if any(c.strip() not in ("0", "1") for c in cells):
                raise DataError(f"{path}:{lineno}: non-binary cell in row {name!r}")
            values = [float(c) for c in cells]
            if sum(values) == 0:
                raise DataError(f"{path}:{lineno}: sample {name!r} has no skill")
            if name in rows:
                raise DataError(f"{path}:{lineno}: duplicate sample {name!r}")
            rows[name] = values
            order.append(name)
    if sample_names is None:
        return SkillMatrix(np.array([rows[n] for n in order]).reshape(len(order), len(skills)), skills)
    known = set(sample_names)
    unknown = [n for n in order if n not in known]
    if unknown:
        raise DataError(f"{path}: unknown sample name {unknown[0]!r}")
    missing = [n for n in sample_names if n not in rows]
    if missing:
        raise DataError(f"{path}: no skill row for sample {missing[0]!r}")
    return SkillMatrix(np.array([rows[n] for n in sample_names]).reshape(len(sample_names), len(skills)), skills)


def save_skill_matrix(skills: SkillMatrix, sample_names: Sequence[str], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", *skills.skill_names])
        for name, row in zip(sample_names, skills.q):
            writer.writerow([name, *(str(int(v)) for v in row)])


def split_sizes(n: int) -> Tuple[int, int, int]:
    n_train = (6 * n + 9) // 10
    n_val = min((2 * n + 9) // 10, n - n_train)
    return n_train, n_val, n - n_train - n_val


def split_622(matrix: Union[ResponseMatrix, int], seed: int) -> DatasetSplit:
    """Seeded shuffle of triple indices, then contiguous 6:2:2 slices."""
    n = matrix if isinstance(matrix, int) else len(matrix)
    if n < 5:
        raise DataError(f"need at least 5 triples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train, n_val, _ = split_sizes(n)
    return DatasetSplit(np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
                        np.sort(perm[n_train + n_val:]), seed)


def holdout_split(n: int, seed: int, fraction: float = 0.2) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded (fit, validation) index split with ``fraction`` held out."""
    perm = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * fraction))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])
