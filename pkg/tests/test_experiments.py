import csv
import json

import jsonschema
import numpy as np
import pytest

from learnerdiag import experiments as ex
from learnerdiag.data import DataError, ResponseMatrix
from learnerdiag.diagnosers import ConfigError
from learnerdiag.synthetic import SyntheticSpec, generate_synthetic


@pytest.fixture(scope="module")
def synth():
    return generate_synthetic(SyntheticSpec(family="camilla_base", n_learners=12, n_samples=60, n_skills=2, seed=4))


def _config(family="irt", **kw):
    kw.setdefault("seeds", [1, 21])
    kw.setdefault("max_epochs", 15)
    kw.setdefault("patience", 5)
    hp = {"lr": 0.02, "ld1": 8, "ld2": 4, "latent_skills": 2}
    hp.update(kw.pop("hparams", {}))
    return ex.ExperimentConfig(family=family, hparams=hp, **kw)


def _strip(report):
    return {k: v for k, v in report.items() if k != "created_at"}


def test_config_rejects_unknown_keys_and_families():
    with pytest.raises(ConfigError):
        ex.ExperimentConfig.from_dict({"famly": "irt"})
    with pytest.raises(ConfigError):
        ex.ExperimentConfig(family="nope")
    cfg = ex.ExperimentConfig.from_dict({"family": "mirt", "task_kind": "reg", "hparams": {"lr": 0.01}})
    assert cfg.task_kind == "regression"
    assert cfg.hparams == {"lr": 0.01, "ld1": 128, "ld2": 64, "latent_skills": 5}


def test_default_grids():
    assert ex.DEFAULT_GRIDS == {"lr": [0.0001, 0.001, 0.005, 0.01], "ld1": [16, 32, 64, 128, 256, 512],
                                "ld2": [16, 32, 64], "latent_skills": [5, 10, 20, 50]}


def test_t_interval():
    vals = [0.1, 0.3, 0.2, 0.4, 0.5, 0.3, 0.2, 0.6, 0.4, 0.5]
    lo, hi = ex.t_interval(vals)
    # 0.975 quantile of Student-t with 9 dof, by high-precision root finding
    half = 2.2621571627982055 * np.std(vals, ddof=1) / np.sqrt(10)
    assert lo == pytest.approx(np.mean(vals) - half, abs=1e-9)
    assert hi == pytest.approx(np.mean(vals) + half, abs=1e-9)


def test_reliability_report(synth):
    cfg = _config("vanilla", seeds=[1, 21, 42, 84, 168, 336, 672, 1344, 2688, 5376])
    report = ex.run_reliability(synth.responses, None, cfg)
    jsonschema.validate(report, ex.load_schema("reliability"))
    assert len(report["per_seed"]) == 10
    assert set(report["aggregate"]) == {"acc", "f1_macro", "auc", "rmse"}
    assert report["aggregate"]["acc"]["n"] == 10


def test_reliability_family_needs_skills(synth):
    with pytest.raises(ConfigError):
        ex.run_reliability(synth.responses, None, _config("neuralcd"))


def test_reliability_task_mismatch(synth):
    with pytest.raises(ConfigError):
        ex.run_reliability(synth.responses, None, _config("irt", task_kind="reg"))


def test_reports_are_deterministic(synth, tmp_path):
    cfg = _config("camilla_base")
    a = ex.run_reliability(synth.responses, synth.skills, cfg)
    b = ex.run_reliability(synth.responses, synth.skills, cfg)
    assert _strip(a) == _strip(b)
    ex.dump_report(_strip(a), tmp_path / "a.json")
    ex.dump_report(_strip(b), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_vanilla_consistency_is_perfect(synth):
    report = ex.run_rank_consistency(synth.responses, None, _config("vanilla"))
    jsonschema.validate(report, ex.load_schema("consistency"))
    assert report["coarse_metric"] == "accuracy"
    assert all(r["kendall_tau"] == 1.0 for r in report["per_seed"])
    assert report["aggregate"]["kendall_tau"]["mean"] == 1.0


def test_consistency_regression_is_against_mae():
    data = generate_synthetic(SyntheticSpec(family="irt", n_learners=15, n_samples=40, seed=2, task_kind="reg"))
    report = ex.run_rank_consistency(data.responses, None, _config("vanilla", task_kind="reg"))
    assert report["coarse_metric"] == "normalized_mae"
    assert report["aggregate"]["kendall_tau"]["mean"] == -1.0


def test_consistency_taus_in_range_and_reproducible(synth):
    cfg = _config("irt")
    a = ex.run_rank_consistency(synth.responses, None, cfg)
    b = ex.run_rank_consistency(synth.responses, None, cfg)
    assert _strip(a) == _strip(b)
    assert all(-1 <= r["kendall_tau"] <= 1 for r in a["per_seed"])


def test_consistency_needs_two_learners():
    r = ResponseMatrix.from_triples([(0, 0, 1.0), (0, 1, 0.0)], 1, 2)
    with pytest.raises(DataError):
        ex.run_rank_consistency(r, None, _config("vanilla"))


def test_draw_partitions_disjoint(synth):
    rng = np.random.default_rng(0)
    a, b = ex.draw_partitions(60, 10, rng)
    assert len(a) == len(b) == 10 and not set(a) & set(b)
    a, b = ex.draw_partitions(60, 5, rng, synth.skills)
    classes = np.argmax(synth.skills.q, axis=1)
    assert not set(a) & set(b)
    for c in (0, 1):
        assert np.sum(classes[a] == c) == 5 and np.sum(classes[b] == c) == 5
    with pytest.raises(DataError):
        ex.draw_partitions(60, 31, rng)


def test_stability_identical_partitions(synth):
    cfg = _config("irt", seeds=[1, 2, 3])
    report = ex.run_rank_stability(synth.responses, None, cfg, [10, 20], identical_partitions=True)
    jsonschema.validate(report, ex.load_schema("stability"))
    for row in report["results"]:
        assert row["taus"] == [1.0, 1.0, 1.0]
        assert row["ci_low"] == row["ci_high"] == 1.0


def test_stability_report(synth):
    report = ex.run_rank_stability(synth.responses, synth.skills, _config("camilla_base"), [5, 10])
    jsonschema.validate(report, ex.load_schema("stability"))
    assert report["metadata"]["partitioning"] == "per-class"
    for row in report["results"]:
        assert len(row["taus"]) == 2
        assert row["ci_low"] <= row["mean"] <= row["ci_high"]
    with pytest.raises(DataError):
        ex.run_rank_stability(synth.responses, None, _config("irt"), [40])


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_diagnose_irt_columns(synth, tmp_path):
    model = ex.fit_full(_config("irt"), synth.responses, None, 1)
    ex.write_diagnose_report(model, synth.responses, tmp_path)
    learners = _read_csv(tmp_path / "learners.csv")
    assert learners[0] == ["learner", "ability_1", "overall"]
    assert len(learners) == 13
    samples = _read_csv(tmp_path / "samples.csv")
    assert samples[0] == ["sample", "difficulty", "discrimination"]
    assert all(0 <= float(r[1]) <= 1 for r in samples[1:])
    assert all(0 <= float(v) <= 1 for r in learners[1:] for v in r[1:])


def test_diagnose_camilla_columns(synth, tmp_path):
    model = ex.fit_full(_config("camilla", hparams={"latent_skills": 3}), synth.responses, None, 1)
    ex.write_diagnose_report(model, synth.responses, tmp_path)
    learners = _read_csv(tmp_path / "learners.csv")
    assert learners[0] == ["learner", "ability_1", "ability_2", "ability_3", "overall"]
    samples = _read_csv(tmp_path / "samples.csv")
    assert all(0 <= float(r[1]) <= 1 for r in samples[1:])


def test_search_budget_one(synth):
    report = ex.run_hyperparam_search(synth.responses, None, _config("mirt"), budget=1)
    jsonschema.validate(report, ex.load_schema("search"))
    assert len(report["trials"]) == 1
    assert report["best"] == report["trials"][0]


def test_search_single_point_grid(synth):
    grids = {"lr": [0.01], "latent_skills": [2]}
    report = ex.run_hyperparam_search(synth.responses, None, _config("mirt", grids=grids), budget=3)
    assert report["best"]["hparams"]["lr"] == 0.01 and report["best"]["hparams"]["latent_skills"] == 2


def test_search_winner_is_argmax(synth):
    grids = {"lr": [0.0001, 0.01, 0.05], "latent_skills": [1, 2, 4]}
    report = ex.run_hyperparam_search(synth.responses, None, _config("mirt", grids=grids), budget=5)
    assert all(report["best"]["score"] >= t["score"] for t in report["trials"])
    assert report["best"]["metric"] == "auc"
    assert report["best"]["value"] >= max(t["value"] for t in report["trials"])


def test_search_errors(synth):
    with pytest.raises(ConfigError):
        ex.run_hyperparam_search(synth.responses, None, _config("mirt", grids={"lr": []}), budget=1)
    with pytest.raises(ConfigError):
        ex.run_hyperparam_search(synth.responses, None, _config("mirt"), budget=0)


def test_dump_report_is_sorted_json(tmp_path):
    ex.dump_report({"b": 1, "a": [1, 2]}, tmp_path / "x" / "r.json")
    text = (tmp_path / "x" / "r.json").read_text()
    assert json.loads(text) == {"a": [1, 2], "b": 1}
    assert text.index('"a"') < text.index('"b"')
