"""Visual dictionary: a convex mixture of diagonal Gaussians over texture
descriptors, trained with EM, and the posterior probabilistic histogram.

The model is {w_g, mu_g, var_g} for g = 1..G with sum(w) = 1.  A descriptor
x is encoded as the vector of posterior component probabilities

    h[g] = w_g N(x; mu_g, var_g) / sum_j w_j N(x; mu_j, var_j)

computed in the log domain with log-sum-exp, so extreme outliers still
produce a valid histogram.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class VisualDictionary:
    weights: np.ndarray    # (G,) simplex
    means: np.ndarray      # (G, d)
    variances: np.ndarray  # (G, d) diagonal covariances, floored
    loglik_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if self.weights.ndim != 1 or self.means.shape != self.variances.shape \
                or self.means.shape[0] != self.weights.shape[0]:
            raise ValueError("inconsistent dictionary shapes")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("component weights must sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("variances must stay positive")

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _log_joint(dictionary: VisualDictionary, x: np.ndarray) -> np.ndarray:
    """log(w_g) + log N(x_i; mu_g, var_g) for all samples and components,
    shape (n, G)."""
    var = dictionary.variances
    log_norm = -0.5 * (dictionary.dim * LOG_2PI + np.log(var).sum(axis=1))
    # expanded quadratic form keeps the E-step at three matmuls instead of
    # materializing an (n, G, d) difference tensor
    inv = 1.0 / var
    maha = ((x * x) @ inv.T - 2.0 * (x @ (dictionary.means * inv).T)
            + (dictionary.means ** 2 * inv).sum(axis=1)[None, :])
    with np.errstate(divide="ignore"):  # a zero weight is a valid dead component
        log_w = np.log(dictionary.weights)
    return log_w[None, :] + log_norm[None, :] - 0.5 * maha


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    return np.squeeze(amax, axis) + np.log(np.exp(a - amax).sum(axis=axis))


def posterior_histogram(dictionary: VisualDictionary, x: np.ndarray) -> np.ndarray:
    """Posterior component probabilities for one descriptor or a batch.

    Accepts (d,) or (n, d); returns (G,) or (n, G).  Rows sum to 1.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != dictionary.dim:
        raise ValueError(f"descriptor dim {x.shape[1]} != dictionary dim {dictionary.dim}")
    log_joint = _log_joint(dictionary, x)
    log_post = log_joint - _logsumexp(log_joint, axis=1)[:, None]
    post = np.exp(log_post)
    return post[0] if single else post


def _kmeans(x: np.ndarray, k: int, iters: int, rng: np.random.Generator):
    """Seeded Lloyd iterations.  Centers start from k distinct samples;
    assignment ties resolve to the lowest center index; empty clusters keep
    their previous center."""
    n = x.shape[0]
    centers, seen = [], set()
    for i in rng.permutation(n):
        key = x[i].tobytes()
        if key not in seen:
            seen.add(key)
            centers.append(x[i])
            if len(centers) == k:
                break
    if len(centers) < k:
        raise ValueError(f"need at least {k} distinct descriptors, found {len(centers)}")
    centers = np.stack(centers)
    assign = None
    for _ in range(iters):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)  # ties -> lowest index
        for g in range(k):
            members = x[assign == g]
            if len(members):
                centers[g] = members.mean(axis=0)
    if assign is None:
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
    return centers, assign


def train_dictionary(descriptors: np.ndarray, n_components: int,
                     max_iters: int = 100, tol: float = 1e-6, seed: int = 0,
                     variance_floor: float = 1e-4,
                     kmeans_iters: int = 10) -> VisualDictionary:
    """EM from a seeded k-means start.

    Stops after ``max_iters`` iterations or when the per-sample
    log-likelihood improves by less than ``tol``.  The per-iteration
    log-likelihood sequence is kept on the returned model for inspection.
    """
    x = np.asarray(descriptors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("descriptors must be a 2-D array (n, d)")
    if not np.all(np.isfinite(x)):
        raise ValueError("descriptors contain non-finite values")
    n, d = x.shape
    if n_components < 1:
        raise ValueError("need at least one component")
    if n < n_components:
        raise ValueError(f"fewer samples ({n}) than components ({n_components})")

    rng = np.random.default_rng(seed)
    centers, assign = _kmeans(x, n_components, kmeans_iters, rng)

    weights = np.empty(n_components)
    variances = np.empty((n_components, d))
    global_var = np.maximum(x.var(axis=0), variance_floor)
    for g in range(n_components):
        members = x[assign == g]
        weights[g] = max(len(members), 1)
        if len(members):
            variances[g] = np.maximum(members.var(axis=0), variance_floor)
        else:
            variances[g] = global_var
    weights /= weights.sum()
    model = VisualDictionary(weights, centers.copy(), variances)

    history: list[float] = []
    for _ in range(max_iters):
        log_joint = _log_joint(model, x)
        log_evidence = _logsumexp(log_joint, axis=1)
        ll = float(log_evidence.mean())
        history.append(ll)
        if len(history) > 1 and ll - history[-2] < tol:
            break
        resp = np.exp(log_joint - log_evidence[:, None])  # (n, G)
        mass = resp.sum(axis=0)
        safe_mass = np.maximum(mass, np.finfo(np.float64).tiny)
        model.weights = mass / n
        model.means = (resp.T @ x) / safe_mass[:, None]
        second = (resp.T @ (x * x)) / safe_mass[:, None]
        model.variances = np.maximum(second - model.means ** 2, variance_floor)
        # guard against fully starved components
        model.weights = model.weights / model.weights.sum()

    model.loglik_history = history
    return model
