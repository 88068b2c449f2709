import numpy as np
import pytest

from setverify.config import PipelineConfig
from setverify.dictionary import VisualDictionary
from setverify.metrics import (binet_cauchy_distance, geodesic_distance,
                               hausdorff_distance, modified_hausdorff_distance,
                               orthonormal_basis, principal_angles)
from setverify.regions import RegionLayout
from setverify.similarity import (SetFeatures, extract_set_features,
                                  feature_index, feature_mode_and_metric,
                                  load_similarity_matrix, save_similarity_matrix,
                                  similarity_vector)

DESK = PipelineConfig(dictionary_size=5, region_stride=4, boosting_rounds=5)


def _toy_dictionary(g=5, dim=15, seed=0):
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, 0.5, size=(g, dim))
    return VisualDictionary(np.full(g, 1.0 / g), means, np.full((g, dim), 0.05))


def _random_set(rng, l=3, size=64):
    return rng.random((l, size, size))


@pytest.fixture(scope="module")
def layout():
    return RegionLayout.from_config(DESK)


@pytest.fixture(scope="module")
def dictionary():
    return _toy_dictionary()


def test_extraction_shapes_and_fingerprint(layout, dictionary):
    rng = np.random.default_rng(1)
    feat = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    assert feat.modes.shape == (layout.n_regions, 5, 3)
    assert feat.layout_fingerprint == DESK.layout_fingerprint()


def test_identical_images_give_rank_one_modes(layout, dictionary):
    rng = np.random.default_rng(2)
    img = rng.random((64, 64))
    feat = extract_set_features(np.stack([img, img, img]), dictionary, layout, DESK)
    _, ranks = feat.bases(DESK.rank_tol)
    assert np.all(ranks == 1)
    spread = feat.modes.max(axis=2) - feat.modes.min(axis=2)
    assert spread.max() == 0.0


def test_self_similarity_is_zero(layout, dictionary):
    rng = np.random.default_rng(3)
    feat = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    vec = similarity_vector(feat, feat, DESK.metric_suite, DESK.rank_tol)
    assert vec.shape == (4 * layout.n_regions,)
    np.testing.assert_allclose(vec, 0.0, atol=1e-7)


def test_symmetry(layout, dictionary):
    rng = np.random.default_rng(4)
    fa = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    fb = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    ab = similarity_vector(fa, fb, DESK.metric_suite, DESK.rank_tol)
    ba = similarity_vector(fb, fa, DESK.metric_suite, DESK.rank_tol)
    np.testing.assert_allclose(ab, ba, atol=1e-10)


def test_determinism(layout, dictionary):
    rng = np.random.default_rng(5)
    images_a = _random_set(rng)
    images_b = _random_set(rng)
    runs = []
    for _ in range(2):
        fa = extract_set_features(images_a, dictionary, layout, DESK)
        fb = extract_set_features(images_b, dictionary, layout, DESK)
        runs.append(similarity_vector(fa, fb, DESK.metric_suite, DESK.rank_tol))
    np.testing.assert_array_equal(runs[0], runs[1])


def test_vector_matches_per_mode_metrics(layout, dictionary):
    rng = np.random.default_rng(6)
    fa = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    fb = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    vec = similarity_vector(fa, fb, DESK.metric_suite, DESK.rank_tol)
    for j in rng.choice(layout.n_regions, 25, replace=False):
        ma, mb = fa.mode(j), fb.mode(j)
        angles = principal_angles(orthonormal_basis(ma, DESK.rank_tol),
                                  orthonormal_basis(mb, DESK.rank_tol))
        assert abs(vec[feature_index(j, 0, 4)] - geodesic_distance(angles)) < 1e-10
        assert abs(vec[feature_index(j, 1, 4)] - binet_cauchy_distance(angles)) < 1e-10
        # exemplar values are bit-identical to the single-pair functions
        assert vec[feature_index(j, 2, 4)] == hausdorff_distance(ma, mb)
        assert vec[feature_index(j, 3, 4)] == modified_hausdorff_distance(ma, mb)


def test_paper_geometry_mode_count_with_small_dictionary():
    cfg = PipelineConfig(dictionary_size=4)
    layout = RegionLayout.from_config(cfg)
    dictionary = _toy_dictionary(g=4)
    rng = np.random.default_rng(7)
    fa = extract_set_features(_random_set(rng), dictionary, layout, cfg)
    assert fa.modes.shape == (9834, 4, 3)
    fb = extract_set_features(_random_set(rng), dictionary, layout, cfg)
    vec = similarity_vector(fa, fb, cfg.metric_suite, cfg.rank_tol)
    assert vec.shape == (39336,)
    assert np.all(np.isfinite(vec))


def test_single_metric_suite_is_column_slice(layout, dictionary):
    rng = np.random.default_rng(8)
    fa = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    fb = extract_set_features(_random_set(rng), dictionary, layout, DESK)
    full = similarity_vector(fa, fb, DESK.metric_suite, DESK.rank_tol)
    only_mhd = similarity_vector(fa, fb, ("mhd",), DESK.rank_tol)
    np.testing.assert_array_equal(only_mhd, full.reshape(-1, 4)[:, 3])


def test_zero_mode_rule():
    fingerprint = "test"
    rng = np.random.default_rng(9)
    modes_a = rng.random((4, 6, 3))
    modes_b = rng.random((4, 6, 3))
    modes_a[2] = 0.0  # dead region on one side only
    fa = SetFeatures(modes_a, fingerprint)
    fb = SetFeatures(modes_b, fingerprint)
    vec = similarity_vector(fa, fb)
    assert vec[feature_index(2, 0, 4)] == 0.0
    assert vec[feature_index(2, 1, 4)] == 0.0
    assert vec[feature_index(2, 2, 4)] == hausdorff_distance(modes_a[2], modes_b[2])
    assert vec[feature_index(2, 3, 4)] > 0.0


def test_layout_mismatch_rejected():
    rng = np.random.default_rng(10)
    fa = SetFeatures(rng.random((3, 4, 2)), "aaa")
    fb = SetFeatures(rng.random((3, 4, 2)), "bbb")
    with pytest.raises(ValueError):
        similarity_vector(fa, fb)


def test_feature_index_mapping_bijective():
    k = 4
    seen = set()
    for j in range(10):
        for m in range(k):
            idx = feature_index(j, m, k)
            assert feature_mode_and_metric(idx, k) == (j, m)
            seen.add(idx)
    assert seen == set(range(40))


def test_mismatched_image_size_rejected(layout, dictionary):
    rng = np.random.default_rng(11)
    with pytest.raises(ValueError):
        extract_set_features(rng.random((3, 32, 32)), dictionary, layout, DESK)


def test_similarity_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(12)
    m = rng.random((5, 12))
    save_similarity_matrix(tmp_path / "cache", m, "fp", ("mhd",))
    again = load_similarity_matrix(tmp_path / "cache", "fp")
    np.testing.assert_array_equal(m, again)
    with pytest.raises(ValueError):
        load_similarity_matrix(tmp_path / "cache", "other-fp")
