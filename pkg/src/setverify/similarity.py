"""Per-set local modes and the stacked multi-metric similarity vector.

For a set of l images, every region j yields a local mode: the (G, l)
matrix of that region's descriptors across the images.  Comparing two sets
applies each configured metric to every corresponding mode pair and stacks
the values mode-major, metric-minor:

    [m0(d1), m0(d2), ..., m0(dk), m1(d1), ..., m_{nu-1}(dk)]

so feature index = mode_index * k + metric_index.  Trained models store raw
feature indices, which is why features carry the layout fingerprint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dictionary import VisualDictionary, posterior_histogram
from .regions import BlockHistogramTable, RegionLayout
from .texture import image_descriptors

# modes per chunk are capped so the (G, chunk, lA, lB) difference tensor
# stays small even at paper-scale G
_CHUNK_BUDGET = 4_000_000


@dataclass
class SetFeatures:
    modes: np.ndarray          # (n_regions, G, l)
    layout_fingerprint: str
    _bases: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    @property
    def n_images(self) -> int:
        return self.modes.shape[2]

    def mode(self, j: int) -> np.ndarray:
        return self.modes[j]

    def bases(self, rank_tol: float) -> tuple[np.ndarray, np.ndarray]:
        """Batched orthonormal bases of every mode: (U, ranks) where U is
        (n_regions, G, l) left singular vectors and ranks[j] says how many
        leading columns of U[j] form the basis (0 for an all-zero mode)."""
        key = float(rank_tol)
        if key not in self._bases:
            u, s, _ = np.linalg.svd(self.modes, full_matrices=False)
            nonzero = s[:, :1] > 0.0
            ranks = np.where(
                nonzero[:, 0],
                (s > rank_tol * s[:, :1]).sum(axis=1),
                0,
            ).astype(np.intp)
            self._bases[key] = (u, ranks)
        return self._bases[key]


def extract_set_features(images, dictionary: VisualDictionary,
                         layout: RegionLayout, cfg) -> SetFeatures:
    """Full per-set feature extraction: blocks -> texture descriptors ->
    posterior histograms -> direct and compound region descriptors, stacked
    per region into local modes."""
    stack = images.images if hasattr(images, "images") else np.asarray(images)
    if stack.ndim != 3:
        raise ValueError("expected an image set of shape (l, H, W)")
    h, w = stack.shape[1:]
    if (h, w) != (layout.height, layout.width):
        raise ValueError(f"images are {w}x{h} but layout expects "
                         f"{layout.width}x{layout.height}")
    per_image = []
    ny = (h - cfg.block_size) // cfg.block_step + 1
    nx = (w - cfg.block_size) // cfg.block_step + 1
    for image in stack:
        desc = image_descriptors(image, cfg.block_size, cfg.block_step,
                                 cfg.descriptor_dim, cfg.descriptor_unit_variance)
        hist = posterior_histogram(dictionary, desc).reshape(ny, nx, -1)
        table = BlockHistogramTable(hist, cfg.block_size, cfg.block_step)
        per_image.append(layout.region_descriptors(table, cfg.compound_normalize))
    return SetFeatures(np.stack(per_image, axis=2), cfg.layout_fingerprint())


def _exemplar_distances(modes_a: np.ndarray, modes_b: np.ndarray):
    """Batched Hausdorff and modified Hausdorff over all modes.

    The squared distances accumulate over the descriptor axis in index
    order (leading-axis reduction), which keeps every value bit-identical
    to the single-pair functions in :mod:`setverify.metrics`.
    """
    n, g, la = modes_a.shape
    lb = modes_b.shape[2]
    hd = np.empty(n)
    mhd = np.empty(n)
    chunk = max(1, _CHUNK_BUDGET // max(1, g * la * lb))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        a = modes_a[lo:hi].transpose(1, 0, 2)   # (G, m, lA)
        b = modes_b[lo:hi].transpose(1, 0, 2)
        sq = ((a[:, :, :, None] - b[:, :, None, :]) ** 2).sum(axis=0)
        d = np.sqrt(sq)                          # (m, lA, lB)
        min_ab = d.min(axis=2)                   # per a-column nearest b
        min_ba = d.min(axis=1)
        hd[lo:hi] = np.maximum(min_ab.max(axis=1), min_ba.max(axis=1))
        mhd[lo:hi] = np.maximum(min_ab.mean(axis=1), min_ba.mean(axis=1))
    return hd, mhd


def _subspace_distances(feat_a: SetFeatures, feat_b: SetFeatures, rank_tol: float):
    """Batched geodesic and Binet-Cauchy distances over all modes, grouped
    by rank pattern so the SVDs stay stacked.  Modes that are all-zero on
    either side get distance 0 for both measures."""
    ua, ranks_a = feat_a.bases(rank_tol)
    ub, ranks_b = feat_b.bases(rank_tol)
    n = feat_a.n_modes
    geo = np.zeros(n)
    bc = np.zeros(n)
    for ra in np.unique(ranks_a):
        if ra == 0:
            continue
        for rb in np.unique(ranks_b):
            if rb == 0:
                continue
            rows = np.where((ranks_a == ra) & (ranks_b == rb))[0]
            if not len(rows):
                continue
            cross = np.matmul(ua[rows, :, :ra].transpose(0, 2, 1), ub[rows, :, :rb])
            cosines = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
            angles = np.arccos(cosines)
            geo[rows] = (angles ** 2).sum(axis=1)
            bc[rows] = np.sqrt(np.clip(1.0 - np.prod(cosines ** 2, axis=1), 0.0, 1.0))
    return geo, bc


def similarity_vector(feat_a: SetFeatures, feat_b: SetFeatures,
                      metric_suite: tuple[str, ...] = ("geodesic", "binet_cauchy",
                                                       "hausdorff", "mhd"),
                      rank_tol: float = 1e-10) -> np.ndarray:
    """The k*nu similarity vector between two sets (see module docstring
    for the feature ordering)."""
    if feat_a.layout_fingerprint != feat_b.layout_fingerprint:
        raise ValueError("sets were extracted under different layouts: "
                         f"{feat_a.layout_fingerprint} vs {feat_b.layout_fingerprint}")
    if feat_a.n_modes != feat_b.n_modes:
        raise ValueError("mode counts differ")
    columns: dict[str, np.ndarray] = {}
    if "hausdorff" in metric_suite or "mhd" in metric_suite:
        columns["hausdorff"], columns["mhd"] = _exemplar_distances(feat_a.modes,
                                                                   feat_b.modes)
    if "geodesic" in metric_suite or "binet_cauchy" in metric_suite:
        columns["geodesic"], columns["binet_cauchy"] = _subspace_distances(
            feat_a, feat_b, rank_tol)
    stacked = np.stack([columns[m] for m in metric_suite], axis=1)
    return stacked.reshape(-1)


def feature_index(mode_index: int, metric_index: int, n_metrics: int) -> int:
    return mode_index * n_metrics + metric_index


def feature_mode_and_metric(index: int, n_metrics: int) -> tuple[int, int]:
    return index // n_metrics, index % n_metrics


def save_similarity_matrix(path_base, matrix: np.ndarray, layout_fingerprint: str,
                           metric_suite: tuple[str, ...]) -> None:
    """Persist pair vectors as a flat little-endian float64 matrix (one row
    per pair) plus a JSON sidecar describing the feature ordering."""
    base = Path(path_base)
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    base.with_suffix(".bin").write_bytes(matrix.tobytes())
    sidecar = {
        "rows": int(matrix.shape[0]),
        "dim": int(matrix.shape[1]),
        "dtype": "<f8",
        "order": "row-major",
        "feature_order": "mode-major, metric-minor",
        "layout_fingerprint": layout_fingerprint,
        "metric_suite": list(metric_suite),
    }
    base.with_suffix(".json").write_text(json.dumps(sidecar, indent=1, sort_keys=True))


def load_similarity_matrix(path_base, layout_fingerprint: str | None = None) -> np.ndarray:
    base = Path(path_base)
    sidecar = json.loads(base.with_suffix(".json").read_text())
    if layout_fingerprint is not None and sidecar["layout_fingerprint"] != layout_fingerprint:
        raise ValueError("cached vectors were computed under a different layout")
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(), dtype=sidecar["dtype"])
    return raw.reshape(sidecar["rows"], sidecar["dim"]).copy()
