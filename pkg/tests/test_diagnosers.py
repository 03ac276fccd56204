import numpy as np
import pytest

from learnerdiag.data import ResponseMatrix, SkillMatrix
from learnerdiag.diagnosers import (FAMILIES, ConfigError, NotFittedError, TrainConfig, camilla_base_probability,
                                    irt_probability, load_checkpoint, make_diagnoser, mirt_probability,
                                    save_checkpoint, subset_ability)
from learnerdiag.diagnosers.base import masked_overall
import oracles

SKILLED = ("skill_vanilla", "neuralcd", "camilla_base")


def ready(model, data=None):
    """Mark a model fitted without moving its parameters."""
    if data is None:
        data = ResponseMatrix.from_triples([(0, 0, 1.0)], model.n_learners, model.n_samples, model.task_kind)
    model.fit(data, config=TrainConfig(max_epochs=0))
    return model


def build(family, n=4, m=6, k=2, **hp):
    q = np.zeros((m, k))
    q[np.arange(m), np.arange(m) % k] = 1
    q[0] = 1
    skills = SkillMatrix(q)
    hp.setdefault("ld1", 8)
    hp.setdefault("ld2", 4)
    return make_diagnoser(family, n, m, skills=skills, seed=3, **hp)


def zero_head(model):
    for name in model.head.weight_names + model.head.bias_names:
        model.params[name].value[...] = 0.0


# -- factory and errors --------------------------------------------------------

def test_unknown_family():
    with pytest.raises(ConfigError):
        make_diagnoser("bogus", 2, 2)


@pytest.mark.parametrize("family", SKILLED)
def test_missing_skills_is_a_config_error(family):
    with pytest.raises(ConfigError):
        make_diagnoser(family, 3, 3)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_unfitted_and_range_errors(family):
    model = build(family)
    with pytest.raises(NotFittedError):
        model.predict([0], [0])
    with pytest.raises(NotFittedError):
        model.ability(0)
    ready(model)
    with pytest.raises(IndexError):
        model.predict([4], [0])
    with pytest.raises(IndexError):
        model.predict([0], [6])
    with pytest.raises(IndexError):
        model.ability(-1)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_outputs_in_unit_interval(family, rng):
    model = build(family)
    ready(model, ResponseMatrix.from_dense((rng.random((4, 6)) < 0.5).astype(float)))
    li, sj = np.meshgrid(np.arange(4), np.arange(6), indexing="ij")
    pred = model.predict(li.ravel(), sj.ravel())
    assert pred.shape == (24,)
    assert np.all((pred >= 0) & (pred <= 1))
    factors = model.sample_factors()
    assert np.all((factors["difficulty"] >= 0) & (factors["difficulty"] <= 1))
    overall = model.overall_abilities()
    assert overall.shape == (4,) and np.all(np.isfinite(overall))


# -- Vanilla / Skill-Vanilla -----------------------------------------------------

def test_vanilla_single_observation():
    model = make_diagnoser("vanilla", 1, 1)
    model.fit(ResponseMatrix.from_triples([(0, 0, 1.0)], 1, 1))
    assert model.predict([0], [0])[0] == 1.0


def test_vanilla_mean_and_unseen_learner():
    r = ResponseMatrix.from_triples([(0, 0, 1.0), (0, 1, 0.0), (0, 2, 1.0), (0, 3, 0.0), (1, 0, 1.0)], 3, 5)
    model = make_diagnoser("vanilla", 3, 5)
    summary = model.fit(r)
    np.testing.assert_array_equal(model.predict([0, 0, 1, 2], [4, 0, 3, 1]), [0.5, 0.5, 1.0, 0.6])
    assert summary.flags
    assert model.ability(0).overall == 0.5


def _skill_fixture():
    m = 11
    q = np.zeros((m, 2))
    q[:5, 0] = 1
    q[5:10, 1] = 1
    q[10] = 1
    scores = [1, 0, 0, 0, 0, 1, 1, 1, 1, 0]
    r = ResponseMatrix.from_triples([(0, j, float(s)) for j, s in enumerate(scores)], 1, m)
    return r, SkillMatrix(q)


def test_skill_vanilla_examples():
    r, skills = _skill_fixture()
    model = make_diagnoser("skill_vanilla", 1, 11, skills=skills)
    model.fit(r)
    assert model.predict([0], [0])[0] == pytest.approx(0.2)
    assert model.predict([0], [10])[0] == pytest.approx(0.5)
    np.testing.assert_allclose(model.ability(0).ability, [0.2, 0.8])

    single = ResponseMatrix.from_triples([(0, 0, 1.0), (0, 1, 0.0)], 1, 3)
    model = make_diagnoser("skill_vanilla", 1, 3, skills=SkillMatrix(np.array([[1, 0], [1, 0], [0, 1]], float)))
    model.fit(single)
    assert model.predict([0], [0])[0] == 0.5
    # skill never seen: falls back to the learner mean
    assert model.predict([0], [2])[0] == 0.5


def test_baselines_match_group_means_exactly():
    rng = np.random.default_rng(10)
    dense = rng.random((10, 20))
    dense[rng.random((10, 20)) < 0.3] = np.nan
    r = ResponseMatrix.from_dense(dense, task_kind="regression")
    q = (rng.random((20, 3)) < 0.4).astype(float)
    q[np.arange(20), rng.integers(0, 3, 20)] = 1
    skills = SkillMatrix(q)
    li, sj = np.meshgrid(np.arange(10), np.arange(20), indexing="ij")
    li, sj = li.ravel(), sj.ravel()

    van = make_diagnoser("vanilla", 10, 20, task_kind="regression")
    van.fit(r)
    sv = make_diagnoser("skill_vanilla", 10, 20, skills=skills, task_kind="regression")
    sv.fit(r)
    by_learner = {i: [s for (a, _, s) in r.triples() if a == i] for i in range(10)}
    expected = [sum(by_learner[i]) / len(by_learner[i]) for i in li]
    assert van.predict(li, sj).tolist() == expected

    expected = []
    for i, j in zip(li, sj):
        means = []
        for k in np.nonzero(q[j])[0]:
            vals = [s for (a, b, s) in r.triples() if a == i and q[b, k] == 1]
            if vals:
                means.append(sum(vals) / len(vals))
        expected.append(sum(means) / len(means) if means else sum(by_learner[i]) / len(by_learner[i]))
    assert sv.predict(li, sj).tolist() == expected


# -- closed-form probabilities ---------------------------------------------------

def test_irt_probability_examples():
    assert irt_probability(0.3, 0.3, 2.0) == 0.5
    assert irt_probability(1.0, -1.0, 0.0) == 0.5
    assert irt_probability(1.0, 0.0, 1.0) == pytest.approx(0.845535, abs=1e-6)


def test_mirt_probability_examples():
    assert mirt_probability([0.4, -1.0], [0.0, 0.0], 0.0) == 0.5
    assert mirt_probability([1, 1], [1, 1], 2) == 0.5
    assert mirt_probability([0.5, 0.5], [1, 2], 0) == pytest.approx(0.817574, abs=1e-6)


def test_camilla_base_probability_examples():
    assert camilla_base_probability([0.3, 0.3], 0.3, [1.2, 0.7], [1, 1]) == 0.5
    assert camilla_base_probability([1.0, -5.0], 0.5, [2.0, 9.0], [1, 0]) == pytest.approx(0.731059, abs=1e-6)


def test_irt_model_matches_closed_form():
    model = ready(build("irt"))
    model.params["a"].value[1, 0] = 1.0
    model.params["d"].value[2, 0] = 0.0
    model.params["k"].value[2, 0] = np.log(np.e - 1)  # softplus -> 1
    assert model.predict([1], [2])[0] == pytest.approx(oracles.logistic(1.7), abs=1e-12)
    model.params["d"].value[3, 0] = 1.0
    assert model.predict([1], [3])[0] == 0.5
    assert model.ability(1).ability.tolist() == [1.0]


def test_mirt_model_matches_closed_form():
    model = ready(build("mirt", latent_skills=2, raw_discrimination=True))
    model.params["theta"].value[0] = [0.5, 0.5]
    model.params["k"].value[1] = [1.0, 2.0]
    model.params["d"].value[1] = 0.0
    assert model.predict([0], [1])[0] == pytest.approx(0.817574, abs=1e-6)


def test_mf_model_examples():
    model = ready(build("mf", latent_skills=2))
    model.params["u"].value[0] = [1.0, 0.0]
    model.params["v"].value[0] = [1.0, 0.0]
    assert model.predict([0], [0])[0] == pytest.approx(0.731059, abs=1e-6)
    model.params["u"].value[1] = 0.0
    assert model.predict([1], [3])[0] == 0.5


def test_neuralcd_zero_input():
    model = ready(build("neuralcd"))
    zero_head(model)
    model.params["W_a"].value[0] = model.params["W_d"].value[2]
    assert model.predict([0], [2])[0] == 0.5


def test_camilla_zero_head():
    model = ready(build("camilla"))
    zero_head(model)
    pred = model.predict(np.repeat(np.arange(4), 6), np.tile(np.arange(6), 4))
    np.testing.assert_array_equal(pred, 0.5)


def test_camilla_zero_interaction_ignores_sample_factors():
    model = ready(build("camilla", latent_skills=3))
    model.params["W_A"].value[0] = model.params["W_D"].value[1]
    before = model.predict([0], [1])[0]
    model.params["W_b"].value[1] = 5.0
    model.params["W_Q"].value[1] = [3.0, -1.0, 0.2]
    assert model.predict([0], [1])[0] == before


def test_camilla_base_forward_example():
    model = ready(build("camilla_base", k=2))  # sample 1 has Q row [0, 1]
    model.params["W_A"].value[0] = [-7.0, 1.0]
    model.params["W_D"].value[1] = 0.5
    model.params["W_b"].value[1] = [3.0, np.log(np.e ** 2 - 1)]
    assert model.predict([0], [1])[0] == pytest.approx(0.731059, abs=1e-6)
    model.params["W_A"].value[0] = 0.5
    assert model.predict([0], [1])[0] == 0.5


def test_camilla_base_with_full_q_is_a_mirt():
    n, m, k = 3, 5, 2
    cb = ready(make_diagnoser("camilla_base", n, m, skills=SkillMatrix(np.ones((m, k))), seed=1))
    mirt = ready(make_diagnoser("mirt", n, m, latent_skills=k, raw_discrimination=True, seed=2))
    disc = cb.discrimination()
    mirt.params["theta"].value[...] = cb.params["W_A"].value
    mirt.params["k"].value[...] = disc
    mirt.params["d"].value[...] = cb.params["W_D"].value * disc.sum(axis=1, keepdims=True)
    li, sj = np.repeat(np.arange(n), m), np.tile(np.arange(m), n)
    np.testing.assert_allclose(cb.predict(li, sj), mirt.predict(li, sj), rtol=0, atol=1e-14)


# -- overall ability -----------------------------------------------------------

def test_masked_overall_examples():
    assert masked_overall([0.2, 0.8], [[1, 0], [0, 1]]) == pytest.approx(0.5)
    q = np.array([[1, 0, 1], [0, 1, 1], [1, 1, 1], [0, 0, 1]], float)
    assert masked_overall([0.3, 0.3, 0.3], q) == pytest.approx(0.3)
    a = [0.1, 0.5, 0.9]
    hand = ((0.1 + 0.9) / 2 + (0.5 + 0.9) / 2 + (0.1 + 0.5 + 0.9) / 3 + 0.9) / 4
    assert masked_overall(a, q) == pytest.approx(hand, abs=1e-15)


def test_camilla_base_overall():
    model = ready(make_diagnoser("camilla_base", 1, 2, skills=SkillMatrix(np.eye(2))))
    model.params["W_A"].value[0] = np.log([0.2 / 0.8, 0.8 / 0.2])  # sigmoid -> [0.2, 0.8]
    assert model.ability(0).overall == pytest.approx(0.5, abs=1e-12)


def test_subset_ability_examples():
    assert subset_ability([0.4, 0.6], [[0.5, 0.5], [0.5, 0.5]]) == pytest.approx(0.5)
    assert subset_ability([0.9, 0.1], [[1.0, 0.0]]) == pytest.approx(0.9)
    assert subset_ability([0.2, 0.5, 0.8], np.full((4, 3), 1 / 3)) == pytest.approx(0.5)


def test_camilla_subset_ability():
    model = ready(build("camilla", latent_skills=2))
    model.params["W_A"].value[0] = np.log([0.4 / 0.6, 0.6 / 0.4])
    model.params["W_Q"].value[...] = 0.0
    assert model.subset_ability(0, [0, 3]) == pytest.approx(0.5, abs=1e-12)
    model.params["W_Q"].value[2] = [60.0, 0.0]
    model.params["W_A"].value[1] = np.log([9.0, 1 / 9.0])
    assert model.subset_ability(1, [2]) == pytest.approx(0.9, abs=1e-12)
    assert model.ability(1, samples=[2]).overall == pytest.approx(0.9, abs=1e-12)
    with pytest.raises(ValueError):
        model.subset_ability(0, [])


def test_ability_profile_shapes():
    assert ready(build("irt")).ability(0).ability.shape == (1,)
    assert ready(build("camilla", latent_skills=3)).ability(0).ability.shape == (3,)
    assert ready(build("camilla_base", k=2)).ability(0).space_kind == "explicit-skill"


# -- monotonicity --------------------------------------------------------------

ABILITY_TABLE = {"irt": "a", "mirt": "theta", "neuralcd": "W_a", "camilla_base": "W_A", "camilla": "W_A"}


@pytest.mark.parametrize("family", sorted(ABILITY_TABLE))
def test_prediction_non_decreasing_in_ability(family):
    rng = np.random.default_rng(5)
    model = ready(build(family, latent_skills=3))
    table = model.params[ABILITY_TABLE[family]].value
    for _ in range(100):
        i, j = int(rng.integers(0, 4)), int(rng.integers(0, 6))
        before = model.predict([i], [j])[0]
        table[i, rng.integers(0, table.shape[1])] += rng.exponential(1.0)
        assert model.predict([i], [j])[0] - before >= -1e-12


# -- checkpoints ----------------------------------------------------------------

@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_checkpoint_round_trip(family, tmp_path, small_cls):
    r, skills = small_cls
    model = make_diagnoser(family, r.n_learners, r.n_samples, skills=skills, seed=4, ld1=6, ld2=3,
                           latent_skills=2)
    model.fit(r, config=TrainConfig(max_epochs=3, lr=0.01))
    save_checkpoint(model, tmp_path / "m.json")
    back = load_checkpoint(tmp_path / "m.json")
    li, sj = np.repeat(np.arange(6), 8), np.tile(np.arange(8), 6)
    assert back.family == family
    assert back.predict(li, sj).tobytes() == model.predict(li, sj).tobytes()
    np.testing.assert_array_equal(back.overall_abilities(), model.overall_abilities())


def test_checkpoint_requires_fit(tmp_path):
    with pytest.raises(NotFittedError):
        save_checkpoint(build("irt"), tmp_path / "m.json")
