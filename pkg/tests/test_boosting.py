import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setverify.boosting import (Stump, VerificationModel, balanced_accuracy,
                                classify, cumulative_weight_map, decision_score,
                                scores_matrix, train_adaboost, train_stump,
                                tune_threshold)
from setverify.regions import RegionLayout

from _oracles import exhaustive_stump_search, exhaustive_threshold_sweep


def _uniform(n):
    return np.full(n, 1.0 / n)


# --- stumps -------------------------------------------------------------------

def test_stump_separable_example():
    values = np.array([0.1, 0.2, 0.8, 0.9])
    labels = np.array([1, 1, -1, -1])
    s = train_stump(values, labels, _uniform(4))
    assert s.error == 0.0
    assert s.threshold == 0.5
    assert s.polarity == 1  # matched below the threshold
    np.testing.assert_array_equal(s.predict(values), labels)


def test_stump_all_positive_labels():
    values = np.array([0.3, 0.6, 0.9])
    s = train_stump(values, np.array([1, 1, 1]), _uniform(3))
    assert s.error == 0.0
    np.testing.assert_array_equal(s.predict(values), [1, 1, 1])


def test_stump_constant_feature_both_classes():
    values = np.zeros(4)
    labels = np.array([1, 1, 1, -1])
    s = train_stump(values, labels, _uniform(4))
    assert abs(s.error - 0.25) < 1e-12  # min(weight of +1, weight of -1)


def test_stump_interleaved_error_floor():
    n = 8
    values = np.arange(n, dtype=float)
    labels = np.where(values % 2 == 0, 1, -1)
    s = train_stump(values, labels, _uniform(n))
    err, theta, pol = exhaustive_stump_search(values, labels, _uniform(n))
    assert abs(s.error - err) < 1e-12
    # an error of 0.5 - 1/(2n) or better is achievable on interleaved data
    # (the optimal cut isolates one endpoint, reaching 0.5 - 1/n)
    assert err <= 0.5 - 1.0 / (2 * n)
    assert abs(err - (0.5 - 1.0 / n)) < 1e-12
    assert s.threshold == theta
    assert s.polarity == pol


@given(st.lists(st.tuples(st.floats(-10, 10, allow_nan=False, width=16),
                          st.sampled_from([1, -1])),
                min_size=2, max_size=12))
@settings(max_examples=80)
def test_stump_matches_exhaustive_search(rows):
    values = np.array([r[0] for r in rows])
    labels = np.array([r[1] for r in rows])
    w = _uniform(len(rows))
    s = train_stump(values, labels, w)
    err, theta, pol = exhaustive_stump_search(values.tolist(), labels.tolist(),
                                              w.tolist())
    assert abs(s.error - err) < 1e-12
    # the chosen stump must realize the same error on the data
    pred = s.predict(values)
    realized = np.sum(w[pred != labels])
    assert abs(realized - err) < 1e-12
    assert (s.threshold, s.polarity) == (theta, pol)


# --- adaboost -----------------------------------------------------------------

def test_separable_1d_takes_one_round():
    x = np.array([[0.1], [0.2], [0.8], [0.9]])
    y = np.array([1, 1, -1, -1])
    model = train_adaboost(x, y, rounds=5)
    # round 2 sees a perfect stump with floored error, so training may
    # continue, but round 1 alone classifies everything
    first = model.stumps[0]
    assert first.error == 0.0
    scores = scores_matrix(model, x)
    assert np.all(np.sign(scores) == y)


def test_informative_feature_selected_first():
    rng = np.random.default_rng(0)
    n = 40
    y = np.repeat([1.0, -1.0], n // 2)
    noise = rng.random(n)
    separable = np.where(y > 0, 0.0, 1.0) + rng.uniform(-0.3, 0.3, n)
    x = np.stack([noise, separable], axis=1)
    model = train_adaboost(x, y, rounds=1)
    assert model.stumps[0].feature == 1


def test_round_errors_below_half_and_alphas_positive():
    rng = np.random.default_rng(1)
    x = rng.random((60, 8))
    y = np.where(x[:, 3] + 0.2 * rng.random(60) > 0.6, 1.0, -1.0)
    model = train_adaboost(x, y, rounds=12)
    assert model.round_errors  # at least one accepted round
    for s, eps in zip(model.stumps, model.round_errors):
        assert eps < 0.5
        assert s.alpha > 0


def test_exponential_loss_bound_dominates_training_error():
    rng = np.random.default_rng(2)
    x = rng.random((80, 6))
    y = np.where(x[:, 0] - 0.5 * x[:, 1] > 0.2, 1.0, -1.0)
    model = train_adaboost(x, y, rounds=10)
    bound = 1.0
    partial = np.zeros(len(y))
    for s, eps in zip(model.stumps, model.round_errors):
        bound *= 2.0 * np.sqrt(max(eps, 1e-12) * (1.0 - eps))
        partial += s.alpha * s.predict(x[:, s.feature])
        err_rate = np.mean(np.sign(partial) != y)
        assert err_rate <= bound + 1e-12


def test_sample_weights_stay_a_distribution():
    rng = np.random.default_rng(3)
    x = rng.random((50, 4))
    y = np.where(x[:, 2] > 0.5, 1.0, -1.0)
    y[::9] *= -1  # inject label noise so boosting runs several rounds
    model = train_adaboost(x, y, rounds=8)
    # replay the weight updates from the recorded stumps
    w = _uniform(len(y))
    for s in model.stumps:
        assert abs(w.sum() - 1.0) < 1e-12
        assert np.all(w > 0)
        w = w * np.exp(-s.alpha * y * s.predict(x[:, s.feature]))
        w /= w.sum()
    assert abs(w.sum() - 1.0) < 1e-12


def test_training_is_deterministic():
    rng = np.random.default_rng(4)
    x = rng.random((40, 5))
    y = np.where(x[:, 1] > 0.4, 1.0, -1.0)
    m1 = train_adaboost(x, y, rounds=6)
    m2 = train_adaboost(x, y, rounds=6)
    assert [(s.feature, s.threshold, s.polarity, s.alpha) for s in m1.stumps] == \
           [(s.feature, s.threshold, s.polarity, s.alpha) for s in m2.stumps]


def test_repeated_feature_selection_is_allowed():
    # single informative feature: every round reuses it
    x = np.array([[0.1], [0.2], [0.3], [0.65], [0.7], [0.9]])
    y = np.array([1.0, 1.0, -1.0, 1.0, -1.0, -1.0])
    model = train_adaboost(x, y, rounds=4)
    assert len(model.stumps) >= 2
    assert model.unique_feature_count == 1


def test_adaboost_input_validation():
    with pytest.raises(ValueError):
        train_adaboost(np.empty((0, 3)), np.array([]), 3)
    with pytest.raises(ValueError):
        train_adaboost(np.ones((4, 2)), np.ones(4), 3)  # single class
    with pytest.raises(ValueError):
        train_adaboost(np.ones((4, 2)), np.array([1, 2, -1, -1]), 3)


# --- classification -----------------------------------------------------------

def _model(stumps, tau=0.0, dim=4):
    return VerificationModel(stumps, tau, dim, "fp", ("geodesic",))


def test_classify_single_stump():
    model = _model([Stump(1, 0.5, 1, alpha=0.8)])
    label, score = classify(model, np.array([9.0, 0.2, 9.0, 9.0]))
    assert (label, score) == ("matched", 0.8)
    label, score = classify(model, np.array([9.0, 0.7, 9.0, 9.0]))
    assert (label, score) == ("mismatched", -0.8)


def test_classify_weighted_vote():
    model = _model([Stump(0, 0.5, 1, alpha=1.0), Stump(1, 0.5, 1, alpha=0.4)])
    label, score = classify(model, np.array([0.1, 0.9, 0.0, 0.0]))
    assert label == "matched"
    assert abs(score - 0.6) < 1e-12


def test_classify_touches_only_selected_features():
    model = _model([Stump(2, 0.5, 1, alpha=1.0)])
    vector = np.full(4, np.nan)
    vector[2] = 0.1
    label, score = classify(model, vector)
    assert (label, score) == ("matched", 1.0)


def test_classify_dimension_mismatch():
    model = _model([Stump(0, 0.5, 1, alpha=1.0)])
    with pytest.raises(ValueError):
        decision_score(model, np.zeros(7))


def test_trained_model_classifies_training_pairs():
    rng = np.random.default_rng(5)
    n = 30
    y = np.repeat([1.0, -1.0], n)
    x = np.stack([np.concatenate([rng.uniform(0, 0.4, n), rng.uniform(0.6, 1, n)]),
                  rng.random(2 * n)], axis=1)
    model = train_adaboost(x, y, rounds=10)
    preds = [classify(model, row)[0] for row in x]
    want = ["matched" if t > 0 else "mismatched" for t in y]
    assert preds == want


# --- threshold tuning ----------------------------------------------------------

def test_tuned_threshold_is_gap_midpoint():
    scores = np.array([-2.0, -1.0, 3.0, 4.0])
    labels = np.array([-1.0, -1.0, 1.0, 1.0])
    assert tune_threshold(scores, labels) == 1.0


def test_tuned_threshold_degenerate_returns_zero():
    scores = np.array([1.5, 1.5, 1.5, 1.5])
    labels = np.array([1.0, -1.0, 1.0, -1.0])
    assert tune_threshold(scores, labels) == 0.0
    # same score multiset in both classes: accuracy 0.5 everywhere
    scores = np.array([1.0, 2.0, 1.0, 2.0])
    labels = np.array([1.0, 1.0, -1.0, -1.0])
    assert tune_threshold(scores, labels) == 0.0


def test_tuned_threshold_matches_exhaustive_sweep():
    scores = np.array([-1.0, 0.2, 1.5, -0.4, 0.1, 2.0])
    labels = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
    tau = tune_threshold(scores, labels)
    best = exhaustive_threshold_sweep(scores.tolist(), labels.tolist())
    assert abs(balanced_accuracy(scores, labels, tau) - best) < 1e-12


def test_tuned_threshold_single_class_raises():
    with pytest.raises(ValueError):
        tune_threshold(np.array([1.0, 2.0]), np.array([1.0, 1.0]))


# --- cumulative weight map ------------------------------------------------------

def test_weight_map_single_direct_region():
    layout = RegionLayout(64, 64, 24, 4, (8,))
    model = VerificationModel([Stump(0, 0.5, 1, alpha=0.7)], 0.0,
                              4 * layout.n_regions, "fp",
                              ("geodesic", "binet_cauchy", "hausdorff", "mhd"))
    wmap = cumulative_weight_map(model, layout)
    assert wmap.shape == (64, 64)
    np.testing.assert_allclose(wmap[:24, :24], 0.7)
    assert wmap[30:, 30:].max() == 0.0


def test_weight_map_overlap_adds():
    layout = RegionLayout(64, 64, 24, 4, (8,))
    k = 4
    # feature indices of direct region 0 (metric 2) and direct region 1 (metric 0)
    stumps = [Stump(0 * k + 2, 0.5, 1, alpha=0.7),
              Stump(1 * k + 0, 0.5, 1, alpha=0.4)]
    model = VerificationModel(stumps, 0.0, k * layout.n_regions, "fp",
                              ("geodesic", "binet_cauchy", "hausdorff", "mhd"))
    wmap = cumulative_weight_map(model, layout)
    # region 1 starts at x=4; the strip x in [4, 24) is covered by both
    np.testing.assert_allclose(wmap[:24, 4:24], 1.1)
    np.testing.assert_allclose(wmap[:24, :4], 0.7)


def test_weight_map_compound_union_and_repeats():
    layout = RegionLayout(64, 64, 24, 4, (8,))
    k = 4
    j = layout.n_direct  # first horizontal compound
    stumps = [Stump(j * k, 0.5, 1, alpha=0.3), Stump(j * k + 1, 0.5, 1, alpha=0.2)]
    model = VerificationModel(stumps, 0.0, k * layout.n_regions, "fp",
                              ("geodesic", "binet_cauchy", "hausdorff", "mhd"))
    wmap = cumulative_weight_map(model, layout)
    naive = np.zeros((64, 64))
    for c in layout.compound[0].cells():
        naive[c.y:c.y + 24, c.x:c.x + 24] = 1.0
    np.testing.assert_allclose(wmap, 0.5 * naive, atol=1e-12)


def test_weight_map_feature_out_of_layout():
    layout = RegionLayout(64, 64, 24, 4, (8,))
    model = VerificationModel([Stump(10 ** 7, 0.5, 1, alpha=0.1)], 0.0,
                              10 ** 7 + 1, "fp", ("geodesic",))
    with pytest.raises(IndexError):
        cumulative_weight_map(model, layout)
