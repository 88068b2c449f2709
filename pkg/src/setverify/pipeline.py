"""End-to-end orchestration: descriptor pooling, pair vector computation
with per-set caching, training, threshold tuning and evaluation.

Pair-level work parallelizes across processes; output order never depends
on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import boosting, dataio, model_io
from .config import PipelineConfig
from .dictionary import VisualDictionary, train_dictionary
from .regions import RegionLayout
from .similarity import SetFeatures, extract_set_features, similarity_vector
from .texture import image_descriptors


class FeatureExtractor:
    """Extracts and caches per-set features; an optional image transform
    (e.g. a translation) is applied after loading."""

    def __init__(self, cfg: PipelineConfig, dictionary: VisualDictionary,
                 layout: RegionLayout | None = None, transform=None):
        self.cfg = cfg
        self.dictionary = dictionary
        self.layout = layout if layout is not None else RegionLayout.from_config(cfg)
        self.transform = transform
        self._cache: dict[str, SetFeatures] = {}

    def features_for_dir(self, set_dir) -> SetFeatures:
        key = str(Path(set_dir).resolve())
        if key not in self._cache:
            images = dataio.load_image_set(set_dir).images
            if self.transform is not None:
                images = np.stack([self.transform(im) for im in images])
            self._cache[key] = extract_set_features(images, self.dictionary,
                                                    self.layout, self.cfg)
        return self._cache[key]

    def pair_vector(self, pair: dataio.PairSpec,
                    extractor_b: "FeatureExtractor | None" = None) -> np.ndarray:
        other = extractor_b if extractor_b is not None else self
        return similarity_vector(self.features_for_dir(pair.set_a),
                                 other.features_for_dir(pair.set_b),
                                 self.cfg.metric_suite, self.cfg.rank_tol)


def pooled_descriptors(set_dirs, cfg: PipelineConfig) -> np.ndarray:
    """Texture descriptors of every block of every image in the given set
    directories, pooled into one (n, descriptor_dim) array."""
    chunks = []
    for set_dir in set_dirs:
        for image in dataio.load_image_set(set_dir).images:
            chunks.append(image_descriptors(image, cfg.block_size, cfg.block_step,
                                            cfg.descriptor_dim,
                                            cfg.descriptor_unit_variance))
    if not chunks:
        raise ValueError("no images found in the given set directories")
    return np.concatenate(chunks, axis=0)


def manifest_set_dirs(pairs: list[dataio.PairSpec]) -> list[Path]:
    """Unique set directories of a manifest, first-appearance order."""
    seen: dict[str, Path] = {}
    for p in pairs:
        for d in (p.set_a, p.set_b):
            seen.setdefault(str(d), Path(d))
    return list(seen.values())


def train_dictionary_from_manifest(cfg: PipelineConfig,
                                   pairs: list[dataio.PairSpec]) -> VisualDictionary:
    descriptors = pooled_descriptors(manifest_set_dirs(pairs), cfg)
    return train_dictionary(descriptors, cfg.dictionary_size,
                            cfg.em_max_iters, cfg.em_tol, cfg.seed,
                            cfg.variance_floor, cfg.kmeans_iters)


# -- process-pool plumbing ---------------------------------------------------

_WORKER: FeatureExtractor | None = None


def _init_worker(cfg: PipelineConfig, dictionary: VisualDictionary):
    global _WORKER
    _WORKER = FeatureExtractor(cfg, dictionary)


def _worker_pair_vector(pair: dataio.PairSpec) -> np.ndarray:
    assert _WORKER is not None
    return _WORKER.pair_vector(pair)


def pair_vectors(pairs: list[dataio.PairSpec], cfg: PipelineConfig,
                 dictionary: VisualDictionary, workers: int = 1,
                 extractor: FeatureExtractor | None = None,
                 extractor_b: FeatureExtractor | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Similarity vectors and +-1 labels for a pair manifest, in manifest
    order regardless of worker count."""
    if not pairs:
        raise ValueError("empty pairs manifest")
    labels = np.array([1.0 if p.is_matched else -1.0 for p in pairs])
    if workers > 1 and extractor is None and extractor_b is None:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(cfg, dictionary)) as pool:
            chunk = max(1, len(pairs) // (workers * 4))
            rows = list(pool.map(_worker_pair_vector, pairs, chunksize=chunk))
    else:
        ex = extractor if extractor is not None else FeatureExtractor(cfg, dictionary)
        rows = [ex.pair_vector(p, extractor_b) for p in pairs]
    return np.stack(rows), labels


# -- training and evaluation -------------------------------------------------

def train_verifier(cfg: PipelineConfig, dictionary: VisualDictionary,
                   train_pairs: list[dataio.PairSpec],
                   dev_pairs: list[dataio.PairSpec],
                   workers: int = 1) -> tuple[model_io.ModelBundle, dict]:
    """Boost on the training pairs, tune the decision threshold on the dev
    pairs, and return the self-contained bundle plus a summary report."""
    if not train_pairs:
        raise ValueError("empty training manifest")
    x_train, y_train = pair_vectors(train_pairs, cfg, dictionary, workers)
    model = boosting.train_adaboost(x_train, y_train, cfg.boosting_rounds,
                                    cfg.layout_fingerprint(), cfg.metric_suite)
    if train_pairs is dev_pairs:
        x_dev, y_dev = x_train, y_train
    else:
        x_dev, y_dev = pair_vectors(dev_pairs, cfg, dictionary, workers)
    dev_scores = boosting.scores_matrix(model, x_dev)
    model.tau = boosting.tune_threshold(dev_scores, y_dev)
    report = {
        "train_pairs": len(train_pairs),
        "dev_pairs": len(dev_pairs),
        "rounds": len(model.stumps),
        "unique_features": model.unique_feature_count,
        "train_balanced_accuracy": 100.0 * boosting.balanced_accuracy(
            boosting.scores_matrix(model, x_train), y_train, model.tau),
        "dev_balanced_accuracy": 100.0 * boosting.balanced_accuracy(
            dev_scores, y_dev, model.tau),
        "tau": model.tau,
    }
    return model_io.ModelBundle(cfg, dictionary, model), report


def evaluate_pairs(bundle: model_io.ModelBundle, pairs: list[dataio.PairSpec],
                   workers: int = 1,
                   extractor: FeatureExtractor | None = None,
                   extractor_b: FeatureExtractor | None = None) -> dict:
    """Balanced accuracy report (percentages) plus score histogram data."""
    cfg, model = bundle.config, bundle.model
    x, y = pair_vectors(pairs, cfg, bundle.dictionary, workers,
                        extractor, extractor_b)
    scores = boosting.scores_matrix(model, x)
    pred = np.where(scores >= model.tau, 1.0, -1.0)
    matched = y > 0
    acc_m = float(np.mean(pred[matched] == 1.0)) if matched.any() else float("nan")
    acc_mm = float(np.mean(pred[~matched] == -1.0)) if (~matched).any() else float("nan")
    lo, hi = float(scores.min()), float(scores.max())
    edges = np.linspace(lo, hi, 21) if hi > lo else np.linspace(lo - 1, hi + 1, 21)
    report = {
        "pairs": len(pairs),
        "matched_pairs": int(matched.sum()),
        "mismatched_pairs": int((~matched).sum()),
        "tau": model.tau,
        "matched_accuracy": 100.0 * acc_m,
        "mismatched_accuracy": 100.0 * acc_mm,
        "balanced_accuracy": 50.0 * (acc_m + acc_mm),
        "score_histogram": {
            "edges": [float(e) for e in edges],
            "matched": np.histogram(scores[matched], bins=edges)[0].tolist(),
            "mismatched": np.histogram(scores[~matched], bins=edges)[0].tolist(),
        },
    }
    return report, scores, y


def verify_sets(bundle: model_io.ModelBundle, dir_a, dir_b) -> tuple[str, float]:
    """Classify one pair of set directories."""
    extractor = FeatureExtractor(bundle.config, bundle.dictionary)
    pair = dataio.PairSpec(Path(dir_a), Path(dir_b), dataio.MATCHED)
    vector = extractor.pair_vector(pair)
    return boosting.classify(bundle.model, vector)
