"""Adapted AdaBoost over similarity features.

Each weak learner is a decision stump on a single feature (predicts +1,
"matched", on one side of a threshold), so Q rounds of boosting select Q
features and their mixing weights; classification then needs only Q
feature comparisons regardless of the vector dimension.  Thresholds are
searched at midpoints of consecutive distinct values plus two open-ended
sentinels; ties resolve to the smaller threshold, then to polarity +1, then
to the lowest feature index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .regions import RegionLayout

EPS_FLOOR = 1e-10
# errors this close count as tied, so the documented tie rules are not
# scrambled by cumulative-sum rounding
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    polarity: int      # +1: predict matched below threshold; -1: above
    alpha: float = 0.0
    error: float = 0.0  # weighted training error of the round that chose it

    def predict(self, values: np.ndarray) -> np.ndarray:
        """+1/-1 predictions; values equal to the threshold fall on the
        -polarity side."""
        values = np.asarray(values)
        return np.where(values < self.threshold, self.polarity, -self.polarity)


@dataclass
class VerificationModel:
    stumps: list[Stump]
    tau: float
    dim: int
    layout_fingerprint: str
    metric_suite: tuple[str, ...]
    round_errors: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.stumps:
            raise ValueError("a verification model needs at least one stump")
        if not math.isfinite(self.tau):
            raise ValueError("decision threshold must be finite")

    @property
    def selected_features(self) -> list[int]:
        return [s.feature for s in self.stumps]

    @property
    def unique_feature_count(self) -> int:
        return len(set(self.selected_features))


def _prepare_cuts(vectors: np.ndarray):
    """Sort each feature column once and lay out the candidate thresholds:
    row c of ``theta`` is the cut below sorted sample c (c=0 is -inf, c=n is
    +inf, interior rows are midpoints, invalid where values repeat)."""
    n, d = vectors.shape
    order = np.argsort(vectors, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(vectors, order, axis=0)
    theta = np.empty((n + 1, d))
    theta[0] = -np.inf
    theta[n] = np.inf
    theta[1:n] = 0.5 * (sorted_vals[:-1] + sorted_vals[1:])
    valid = np.ones((n + 1, d), dtype=bool)
    valid[1:n] = sorted_vals[:-1] != sorted_vals[1:]
    return order, theta, valid


def _best_stumps(order, theta, valid, labels, weights):
    """For every feature, the minimum-weighted-error stump under the tie
    rules.  Returns (errors, thresholds, polarities), one entry per feature."""
    n, d = order.shape
    pos_w = np.where(labels > 0, weights, 0.0)
    neg_w = weights - pos_w
    total_pos = pos_w.sum()
    total_neg = neg_w.sum()
    cum_pos = np.zeros((n + 1, d))
    cum_neg = np.zeros((n + 1, d))
    np.cumsum(pos_w[order], axis=0, out=cum_pos[1:])
    np.cumsum(neg_w[order], axis=0, out=cum_neg[1:])
    # polarity +1 predicts matched below the cut
    err_plus = cum_neg + (total_pos - cum_pos)
    err_minus = cum_pos + (total_neg - cum_neg)
    err_plus[~valid] = np.inf
    err_minus[~valid] = np.inf

    # smallest threshold whose error is within TIE_TOL of the per-feature
    # minimum (argmax finds the first candidate cut)
    idx_p = (err_plus <= err_plus.min(axis=0) + TIE_TOL).argmax(axis=0)
    idx_m = (err_minus <= err_minus.min(axis=0) + TIE_TOL).argmax(axis=0)
    cols = np.arange(d)
    ep, em = err_plus[idx_p, cols], err_minus[idx_m, cols]
    tp, tm = theta[idx_p, cols], theta[idx_m, cols]
    tied = np.abs(ep - em) <= TIE_TOL
    use_plus = np.where(tied, tp <= tm, ep < em)
    return (np.where(use_plus, ep, em),
            np.where(use_plus, tp, tm),
            np.where(use_plus, 1, -1))


def train_stump(feature_values: np.ndarray, labels: np.ndarray,
                sample_weights: np.ndarray) -> Stump:
    """Exhaustive single-feature stump fit (alpha left at 0)."""
    x = np.asarray(feature_values, dtype=np.float64).reshape(-1, 1)
    labels = np.asarray(labels)
    w = np.asarray(sample_weights, dtype=np.float64)
    if not len(x):
        raise ValueError("empty training set")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("sample weights must be positive and sum to 1")
    errs, thetas, pols = _best_stumps(*_prepare_cuts(x), labels, w)
    return Stump(0, float(thetas[0]), int(pols[0]), 0.0, float(errs[0]))


def train_adaboost(vectors: np.ndarray, labels: np.ndarray, rounds: int,
                   layout_fingerprint: str = "",
                   metric_suite: tuple[str, ...] = ()) -> VerificationModel:
    """Classic discrete AdaBoost where every round searches all features
    for the best stump.

    Initial weights are uniform; round error is floored at ``EPS_FLOOR``
    before computing alpha = 0.5*ln((1-eps)/eps); weights are
    multiplicatively updated and renormalized.  Training stops early when
    no stump beats chance (eps >= 0.5).  Selecting the same feature in
    several rounds is allowed.  The decision threshold tau starts at 0.
    """
    x = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or not x.shape[0]:
        raise ValueError("empty training set")
    if rounds < 1:
        raise ValueError("need at least one boosting round")
    if len(np.unique(y)) < 2:
        raise ValueError("training set is single-class")
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be +1 (matched) or -1 (mismatched)")

    n, d = x.shape
    order, theta, valid = _prepare_cuts(x)
    w = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    round_errors: list[float] = []
    for _ in range(rounds):
        errs, thetas, pols = _best_stumps(order, theta, valid, y, w)
        # ties (within tolerance) -> lowest feature index
        best = int((errs <= errs.min() + TIE_TOL).argmax())
        eps = float(errs[best])
        if eps >= 0.5:
            break
        floored = max(eps, EPS_FLOOR)
        alpha = 0.5 * math.log((1.0 - floored) / floored)
        stump = Stump(best, float(thetas[best]), int(pols[best]), alpha, eps)
        stumps.append(stump)
        round_errors.append(eps)
        w = w * np.exp(-alpha * y * stump.predict(x[:, best]))
        w /= w.sum()
    if not stumps:
        raise ValueError("no weak learner beat chance on the first round")
    return VerificationModel(stumps, 0.0, d, layout_fingerprint,
                             tuple(metric_suite), round_errors)


def decision_score(model: VerificationModel, vector: np.ndarray) -> float:
    """Weighted-vote score; touches only the selected features."""
    vector = np.asarray(vector)
    if vector.shape != (model.dim,):
        raise ValueError(f"expected a {model.dim}-dim similarity vector, "
                         f"got shape {vector.shape}")
    score = 0.0
    for s in model.stumps:
        value = vector[s.feature]
        score += s.alpha * (s.polarity if value < s.threshold else -s.polarity)
    return score


def classify(model: VerificationModel, vector: np.ndarray) -> tuple[str, float]:
    """('matched'|'mismatched', score); matched iff score >= tau."""
    score = decision_score(model, vector)
    return ("matched" if score >= model.tau else "mismatched"), score


def scores_matrix(model: VerificationModel, vectors: np.ndarray) -> np.ndarray:
    """Scores for a batch of similarity vectors."""
    vectors = np.asarray(vectors)
    scores = np.zeros(vectors.shape[0])
    for s in model.stumps:
        scores += s.alpha * s.predict(vectors[:, s.feature])
    return scores


def balanced_accuracy(scores: np.ndarray, labels: np.ndarray, tau: float) -> float:
    """Mean of per-class accuracies under 'matched iff score >= tau', in [0, 1]."""
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    pred = np.where(scores >= tau, 1.0, -1.0)
    accs = [np.mean(pred[labels == cls] == cls) for cls in (1.0, -1.0)]
    return float(np.mean(accs))


def tune_threshold(dev_scores: np.ndarray, dev_labels: np.ndarray) -> float:
    """Decision threshold maximizing balanced accuracy on held-out scores.

    Candidates are midpoints between consecutive distinct scores plus one
    sentinel on each side.  Ties go to the candidate closest to 0; if the
    accuracy does not depend on the threshold at all, 0 is returned.
    """
    scores = np.asarray(dev_scores, dtype=np.float64)
    labels = np.asarray(dev_labels, dtype=np.float64)
    if not len(scores):
        raise ValueError("empty development set")
    if len(np.unique(labels)) < 2:
        raise ValueError("development set is single-class")
    uniq = np.unique(scores)
    candidates = np.concatenate([[uniq[0] - 1.0],
                                 0.5 * (uniq[:-1] + uniq[1:]),
                                 [uniq[-1] + 1.0]])
    accs = np.array([balanced_accuracy(scores, labels, t) for t in candidates])
    best = accs.max()
    winners = candidates[accs == best]
    if len(winners) == len(candidates):
        return 0.0
    order = np.lexsort((winners, np.abs(winners)))
    return float(winners[order[0]])


def cumulative_weight_map(model: VerificationModel, layout: RegionLayout) -> np.ndarray:
    """Per-pixel sum of the alphas of all selected regions covering the
    pixel (compound features contribute over the union of their cells;
    repeated selections accumulate)."""
    n_metrics = len(model.metric_suite)
    if n_metrics == 0:
        raise ValueError("model does not record its metric suite")
    wmap = np.zeros((layout.height, layout.width))
    for s in model.stumps:
        mode_index = s.feature // n_metrics
        if mode_index >= layout.n_regions:
            raise IndexError(f"feature {s.feature} resolves to region {mode_index}, "
                             f"but the layout has only {layout.n_regions}")
        wmap[layout.region_mask(mode_index)] += s.alpha
    return wmap
