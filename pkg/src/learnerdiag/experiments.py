"""The evaluation protocols: reliability, rank consistency, rank stability,
diagnosis reports and random hyperparameter search.

Every protocol takes in-memory data plus an :class:`ExperimentConfig` and
returns a JSON-ready dict; the CLI only handles files.
"""
from __future__ import annotations

import csv
import datetime as _dt
import importlib.resources
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .data import CLASSIFICATION, DEFAULT_SEEDS, DataError, ResponseMatrix, SkillMatrix, normalize_task
from .diagnosers import FAMILIES, ConfigError, Diagnoser, TrainConfig, make_diagnoser, selection_score
from .io import holdout_split, split_622
from .metrics import evaluate, kendall_tau, spearman_rho

# hyperparameter grids searched for the Camilla family
DEFAULT_GRIDS = {
    "lr": [0.0001, 0.001, 0.005, 0.01],
    "ld1": [16, 32, 64, 128, 256, 512],
    "ld2": [16, 32, 64],
    "latent_skills": [5, 10, 20, 50],
}
DEFAULT_HPARAMS = {"lr": 0.001, "ld1": 128, "ld2": 64, "latent_skills": 5}
DEFAULT_PARTITION_SIZES = (10, 20, 40, 80, 160)


@dataclass
class ExperimentConfig:
    family: str = "camilla"
    hparams: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_HPARAMS))
    seeds: List[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    task_kind: str = CLASSIFICATION
    responses: Optional[str] = None
    qmatrix: Optional[str] = None
    out: str = "reports"
    batch_size: int = 256
    max_epochs: int = 500
    patience: int = 20
    partition_sizes: List[int] = field(default_factory=lambda: list(DEFAULT_PARTITION_SIZES))
    grids: Dict[str, list] = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_GRIDS.items()})
    budget: int = 10
    model: Optional[str] = None

    def __post_init__(self):
        self.task_kind = normalize_task(self.task_kind)
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown diagnoser family {self.family!r}; choose from {sorted(FAMILIES)}")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        merged = dict(DEFAULT_HPARAMS)
        merged.update(self.hparams or {})
        self.hparams = merged

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def train_config(self, seed: int, lr: Optional[float] = None) -> TrainConfig:
        return TrainConfig(lr=float(self.hparams["lr"] if lr is None else lr), batch_size=self.batch_size,
                           max_epochs=self.max_epochs, patience=self.patience, seed=seed)

    def model_hparams(self, hparams: Optional[dict] = None) -> dict:
        return {k: v for k, v in (hparams or self.hparams).items() if k != "lr"}

    def to_dict(self) -> dict:
        return asdict(self)


def build_model(config: ExperimentConfig, responses: ResponseMatrix, skills: Optional[SkillMatrix],
                seed: int, hparams: Optional[dict] = None) -> Diagnoser:
    cls = FAMILIES[config.family]
    if cls.requires_skills and skills is None:
        raise ConfigError(f"{config.family} needs an explicit skill matrix (--qmatrix)")
    return make_diagnoser(config.family, responses.n_learners, responses.n_samples, skills=skills,
                          task_kind=responses.task_kind, seed=seed, **config.model_hparams(hparams))


def _check_task(config: ExperimentConfig, responses: ResponseMatrix) -> None:
    if config.task_kind != responses.task_kind:
        raise ConfigError(f"config task {config.task_kind} does not match data task {responses.task_kind}")


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _mean_std(values: Sequence[Optional[float]]) -> dict:
    vals = np.array([v for v in values if v is not None], dtype=np.float64)
    if vals.size == 0:
        return {"mean": None, "std": None, "n": 0}
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return {"mean": float(np.mean(vals)), "std": std, "n": int(vals.size)}


def t_interval(values: Sequence[float], level: float = 0.95) -> tuple:
    """Student-t confidence interval for the mean."""
    vals = np.asarray(values, dtype=np.float64)
    mean = float(vals.mean())
    if vals.size < 2:
        return mean, mean
    sem = float(vals.std(ddof=1)) / math.sqrt(vals.size)
    half = float(stats.t.ppf(0.5 + level / 2.0, df=vals.size - 1)) * sem
    return mean - half, mean + half


def _header(command: str, config: ExperimentConfig) -> dict:
    return {
        "command": command,
        "family": config.family,
        "task_kind": config.task_kind,
        "hparams": dict(config.hparams),
        "seeds": list(config.seeds),
        "created_at": _timestamp(),
    }


# -- reliability -------------------------------------------------------------

def run_reliability(responses: ResponseMatrix, skills: Optional[SkillMatrix],
                    config: ExperimentConfig) -> dict:
    """Per seed: 6:2:2 split, fit with early stopping on validation, score the test split."""
    _check_task(config, responses)
    report = _header("reliability", config)
    per_seed = []
    for seed in config.seeds:
        split = split_622(responses, seed)
        train, val, test = (responses.subset(split.train), responses.subset(split.validation),
                            responses.subset(split.test))
        model = build_model(config, responses, skills, seed)
        summary = model.fit(train, val, config.train_config(seed))
        preds = model.predict(test.learners, test.samples)
        bundle = evaluate(preds, test.scores, responses.task_kind).to_dict()
        bundle.pop("task_kind")
        per_seed.append({
            "seed": seed,
            "metrics": {k: _finite_or_none(v) for k, v in bundle.items()},
            "split_sizes": list(split.sizes()),
            "best_epoch": summary.best_epoch,
            "epochs_run": summary.epochs_run,
        })
    keys = per_seed[0]["metrics"].keys()
    report["per_seed"] = per_seed
    report["aggregate"] = {k: _mean_std([r["metrics"][k] for r in per_seed]) for k in keys}
    return report


# -- rank consistency ----------------------------------------------------------

def coarse_metric(responses: ResponseMatrix) -> tuple:
    """(name, per-learner values): accuracy, or normalised MAE for regression."""
    means = responses.learner_means()
    if responses.task_kind == CLASSIFICATION:
        return "accuracy", means
    return "normalized_mae", 1.0 - means


def fit_full(config: ExperimentConfig, responses: ResponseMatrix, skills: Optional[SkillMatrix],
             seed: int) -> Diagnoser:
    """Fit on every triple; early stopping watches the fit on those same triples."""
    model = build_model(config, responses, skills, seed)
    model.fit(responses, responses, config.train_config(seed))
    return model


def run_rank_consistency(responses: ResponseMatrix, skills: Optional[SkillMatrix],
                         config: ExperimentConfig) -> dict:
    _check_task(config, responses)
    if responses.n_learners < 2:
        raise DataError("rank consistency needs at least two learners")
    name, coarse = coarse_metric(responses)
    keep = ~np.isnan(coarse)
    report = _header("consistency", config)
    report["coarse_metric"] = name
    per_seed = []
    for seed in config.seeds:
        model = fit_full(config, responses, skills, seed)
        overall = model.overall_abilities()
        try:
            tau = kendall_tau(overall[keep], coarse[keep])
            rho = spearman_rho(overall[keep], coarse[keep])
        except ValueError:
            tau = rho = None
        per_seed.append({"seed": seed, "kendall_tau": tau, "spearman_rho": rho, "n": int(keep.sum())})
    report["per_seed"] = per_seed
    report["aggregate"] = {
        "kendall_tau": _mean_std([r["kendall_tau"] for r in per_seed]),
        "spearman_rho": _mean_std([r["spearman_rho"] for r in per_seed]),
    }
    return report


# -- rank stability ------------------------------------------------------------

def draw_partitions(n_samples: int, size: int, rng: np.random.Generator,
                    skills: Optional[SkillMatrix] = None) -> tuple:
    """Two disjoint sample sets of ``size`` samples each (per class with skills)."""
    if skills is None:
        if 2 * size > n_samples:
            raise DataError(f"partition size {size} too large for {n_samples} samples")
        chosen = rng.permutation(n_samples)[:2 * size]
        return np.sort(chosen[:size]), np.sort(chosen[size:])
    classes = np.argmax(skills.q, axis=1)
    part_a, part_b = [], []
    for c in np.unique(classes):
        members = np.nonzero(classes == c)[0]
        if 2 * size > len(members):
            raise DataError(f"partition size {size} too large for class {skills.skill_names[c]!r} "
                            f"with {len(members)} samples")
        chosen = rng.permutation(members)[:2 * size]
        part_a.append(chosen[:size])
        part_b.append(chosen[size:])
    return np.sort(np.concatenate(part_a)), np.sort(np.concatenate(part_b))


def _partition_ranking(config, responses, skills, samples, seed):
    part = responses.restrict_samples(samples)
    fit_idx, val_idx = holdout_split(len(part), seed)
    model = build_model(config, responses, skills, seed)
    model.fit(part.subset(fit_idx), part.subset(val_idx), config.train_config(seed))
    overall = model.overall_abilities(samples)
    seen = np.bincount(part.learners, minlength=responses.n_learners) > 0
    return overall, seen


def run_rank_stability(responses: ResponseMatrix, skills: Optional[SkillMatrix], config: ExperimentConfig,
                       partition_sizes: Optional[Sequence[int]] = None,
                       identical_partitions: bool = False) -> dict:
    """Kendall tau between learner rankings fitted on two disjoint sample partitions.

    ``identical_partitions`` reuses partition A as B (a self-check hook).
    """
    _check_task(config, responses)
    if responses.n_learners < 2:
        raise DataError("rank stability needs at least two learners")
    sizes = list(partition_sizes or config.partition_sizes)
    report = _header("stability", config)
    report["metadata"] = {
        "partitioning": "per-class" if skills is not None else "uniform",
        "inner_split": "80% fit / 20% validation within each partition",
        "identical_partitions": bool(identical_partitions),
    }
    results = []
    for size in sizes:
        taus = []
        for seed in config.seeds:
            rng = np.random.default_rng([seed, size])
            part_a, part_b = draw_partitions(responses.n_samples, size, rng, skills)
            if identical_partitions:
                part_b = part_a
            ab_a, seen_a = _partition_ranking(config, responses, skills, part_a, seed)
            ab_b, seen_b = _partition_ranking(config, responses, skills, part_b, seed)
            both = seen_a & seen_b
            try:
                taus.append(kendall_tau(ab_a[both], ab_b[both]))
            except ValueError:
                taus.append(0.0)
        lo, hi = t_interval(taus)
        results.append({"partition_size": int(size), "taus": taus, "mean": float(np.mean(taus)),
                        "ci_low": lo, "ci_high": hi})
    report["results"] = results
    return report


# -- diagnosis report ------------------------------------------------------------

_UNBOUNDED = {"irt", "mirt", "mf"}


def diagnose_tables(model: Diagnoser, responses: ResponseMatrix) -> tuple:
    """Rows for the learner table and the sample table (values in [0, 1])."""
    learner_rows = []
    for i in range(model.n_learners):
        prof = model.ability(i)
        vec = prof.ability
        if model.family in _UNBOUNDED:
            vec = 1.0 / (1.0 + np.exp(-vec))
        learner_rows.append([responses.learner_names[i], *[float(v) for v in vec], float(prof.overall)])
    factors = model.sample_factors()
    sample_rows = []
    for j in range(model.n_samples):
        disc = float(factors["discrimination"][j])
        sample_rows.append([responses.sample_names[j], float(factors["difficulty"][j]),
                            disc if math.isfinite(disc) else ""])
    dim = len(learner_rows[0]) - 2
    learner_header = ["learner", *[f"ability_{k + 1}" for k in range(dim)], "overall"]
    return learner_header, learner_rows, ["sample", "difficulty", "discrimination"], sample_rows


def write_diagnose_report(model: Diagnoser, responses: ResponseMatrix, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lh, lrows, sh, srows = diagnose_tables(model, responses)
    for name, header, rows in (("learners.csv", lh, lrows), ("samples.csv", sh, srows)):
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    return {"learners": str(out / "learners.csv"), "samples": str(out / "samples.csv")}


# -- hyperparameter search -------------------------------------------------------

def run_hyperparam_search(responses: ResponseMatrix, skills: Optional[SkillMatrix],
                          config: ExperimentConfig, budget: Optional[int] = None) -> dict:
    """Random search over ``config.grids``; the first seed fixes split and sampling."""
    _check_task(config, responses)
    budget = config.budget if budget is None else budget
    if budget < 1:
        raise ConfigError("search budget must be >= 1")
    if not config.grids or any(len(v) == 0 for v in config.grids.values()):
        raise ConfigError("every hyperparameter grid must be non-empty")
    seed = config.seeds[0]
    rng = np.random.default_rng(seed)
    split = split_622(responses, seed)
    train, val = responses.subset(split.train), responses.subset(split.validation)
    trials = []
    for t in range(budget):
        hp = dict(config.hparams)
        for key in sorted(config.grids):
            grid = config.grids[key]
            hp[key] = grid[int(rng.integers(len(grid)))]
        model = build_model(config, responses, skills, seed, hparams=hp)
        summary = model.fit(train, val, config.train_config(seed, lr=hp["lr"]))
        name, value, score = selection_score(model.predict(val.learners, val.samples), val.scores,
                                             responses.task_kind)
        trials.append({"trial": t, "hparams": hp, "metric": name, "value": value, "score": score,
                       "best_epoch": summary.best_epoch})
    best = max(trials, key=lambda r: r["score"])
    report = _header("search", config)
    report["budget"] = budget
    report["grids"] = {k: list(v) for k, v in config.grids.items()}
    report["best"] = best
    report["trials"] = trials
    return report


def load_schema(command: str) -> dict:
    """JSON schema shipped for the ``command`` report."""
    text = importlib.resources.files("learnerdiag").joinpath("schemas", f"{command}.schema.json").read_text(
        encoding="utf-8")
    return json.loads(text)


def dump_report(report: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
