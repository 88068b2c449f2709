"""Synthetic identity dataset for desk-scale end-to-end runs.

Each identity is a smoothed random field blended with a population-wide
pattern; each image of the identity is a translated crop of that field with
a global illumination offset, an illumination gradient plane, and additive
noise.  The perturbations exercise exactly the robustness properties the
pipeline targets (misalignment and illumination changes).

The generator writes three disjoint identity groups -- train (intended for
dictionary construction), dev and eval -- each with its own balanced pairs
manifest, and is a pure function of its parameters and seed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from . import dataio

SPLITS = ("train", "dev", "eval")


@dataclass(frozen=True)
class SynthParams:
    image_size: int = 64
    identity_blend: float = 0.40    # fraction of identity-specific pattern
    smoothness: float = 2.5         # blur sigma of the base fields
    contrast: float = 0.16          # std of the base field intensities
    max_translation: int = 3        # per-image crop shift, pixels
    illumination_offset: float = 0.08
    illumination_gradient: float = 0.0025  # max slope, intensity per pixel
    noise_sigma: float = 0.02


def _smooth_field(rng: np.random.Generator, size: int, sigma: float) -> np.ndarray:
    field = gaussian_filter(rng.standard_normal((size, size)), sigma, mode="wrap")
    return (field - field.mean()) / max(field.std(), 1e-12)


def _identity_canvas(seed: int, global_id: int, params: SynthParams) -> np.ndarray:
    size = params.image_size + 2 * params.max_translation
    common = _smooth_field(np.random.default_rng([seed, 0]), size, params.smoothness)
    own = _smooth_field(np.random.default_rng([seed, 1, global_id]), size,
                        params.smoothness)
    blend = params.identity_blend
    canvas = (1.0 - blend) * common + blend * own
    canvas = 0.5 + params.contrast * (canvas - canvas.mean()) / max(canvas.std(), 1e-12)
    return np.clip(canvas, 0.02, 0.98)


def _render_image(canvas: np.ndarray, rng: np.random.Generator,
                  params: SynthParams) -> np.ndarray:
    size = params.image_size
    m = params.max_translation
    dx, dy = rng.integers(-m, m + 1, size=2)
    crop = canvas[m + dy:m + dy + size, m + dx:m + dx + size]
    offset = rng.uniform(-params.illumination_offset, params.illumination_offset)
    gx, gy = rng.uniform(-params.illumination_gradient,
                         params.illumination_gradient, size=2)
    coords = np.arange(size) - (size - 1) / 2.0
    plane = gy * coords[:, None] + gx * coords[None, :]
    noise = rng.normal(0.0, params.noise_sigma, (size, size))
    return np.clip(crop + offset + plane + noise, 0.0, 1.0)


def _balanced_pairs(set_dirs: dict[int, list[Path]], rng: np.random.Generator,
                    matched_target: int | None) -> list[dataio.PairSpec]:
    """All (or a sampled subset of) same-identity set pairs, plus an equal
    number of cross-identity pairs."""
    matched = [
        dataio.PairSpec(a, b, dataio.MATCHED)
        for ident in sorted(set_dirs)
        for a, b in itertools.combinations(set_dirs[ident], 2)
    ]
    if matched_target is not None and matched_target < len(matched):
        keep = sorted(rng.choice(len(matched), size=matched_target, replace=False))
        matched = [matched[i] for i in keep]
    cross = [
        (set_dirs[ia][sa], set_dirs[ib][sb])
        for ia, ib in itertools.combinations(sorted(set_dirs), 2)
        for sa in range(len(set_dirs[ia]))
        for sb in range(len(set_dirs[ib]))
    ]
    if len(cross) < len(matched):
        raise ValueError("not enough identities to balance mismatched pairs")
    keep = sorted(rng.choice(len(cross), size=len(matched), replace=False))
    mismatched = [dataio.PairSpec(cross[i][0], cross[i][1], dataio.MISMATCHED)
                  for i in keep]
    return matched + mismatched


def synth_dataset(n_identities: int, sets_per_identity: int, images_per_set: int,
                  seed: int, out_dir, *,
                  train_identities: int | None = None,
                  dev_identities: int | None = None,
                  eval_identities: int | None = None,
                  matched_pairs_per_split: int | None = None,
                  params: SynthParams = SynthParams()) -> dict[str, Path]:
    """Generate the dataset and return {split: manifest_path}.

    ``n_identities`` is the identity count of each split unless overridden
    per split; the three groups never share identities.  Every manifest has
    the same number of matched and mismatched pairs.
    """
    if n_identities < 2:
        raise ValueError("need at least 2 identities per split")
    if sets_per_identity < 2:
        raise ValueError("need at least 2 sets per identity for matched pairs")
    if images_per_set < 1:
        raise ValueError("need at least 1 image per set")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    counts = {
        "train": train_identities if train_identities is not None else n_identities,
        "dev": dev_identities if dev_identities is not None else n_identities,
        "eval": eval_identities if eval_identities is not None else n_identities,
    }
    manifests: dict[str, Path] = {}
    next_global_id = 0
    for split_index, split in enumerate(SPLITS):
        set_dirs: dict[int, list[Path]] = {}
        for local_id in range(counts[split]):
            gid = next_global_id
            next_global_id += 1
            canvas = _identity_canvas(seed, gid, params)
            set_dirs[local_id] = []
            for set_index in range(sets_per_identity):
                set_dir = out_dir / split / f"id_{local_id:03d}" / f"set_{set_index}"
                set_dir.mkdir(parents=True, exist_ok=True)
                set_dirs[local_id].append(set_dir)
                for img_index in range(images_per_set):
                    rng = np.random.default_rng(
                        [seed, 2, gid, set_index, img_index])
                    image = _render_image(canvas, rng, params)
                    dataio.save_image(image, set_dir / f"img_{img_index}.pgm")
        pair_rng = np.random.default_rng([seed, 3, split_index])
        pairs = _balanced_pairs(set_dirs, pair_rng, matched_pairs_per_split)
        manifest = out_dir / f"{split}_pairs.csv"
        dataio.save_pairs_manifest(pairs, manifest)
        manifests[split] = manifest

    meta = {
        "seed": seed,
        "n_identities": n_identities,
        "identity_counts": counts,
        "sets_per_identity": sets_per_identity,
        "images_per_set": images_per_set,
        "matched_pairs_per_split": matched_pairs_per_split,
        "params": asdict(params),
    }
    (out_dir / "dataset.json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    return manifests
