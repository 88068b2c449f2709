"""Pipeline configuration shared by every stage.

A single frozen dataclass carries all geometry, model-size and training
parameters.  It is embedded verbatim in dictionary and model files so that a
trained model is self-describing and any run can be reproduced from the
artifact alone.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

METRIC_NAMES = ("geodesic", "binet_cauchy", "hausdorff", "mhd")


@dataclass(frozen=True)
class PipelineConfig:
    # image geometry
    image_size: int = 64
    # texture descriptors
    block_size: int = 8
    block_step: int = 4
    descriptor_dim: int = 15
    descriptor_unit_variance: bool = False
    # visual dictionary
    dictionary_size: int = 1024
    em_max_iters: int = 100
    em_tol: float = 1e-6
    kmeans_iters: int = 10
    variance_floor: float = 1e-4
    # regions
    region_size: int = 24
    region_stride: int = 1
    compound_offsets: tuple[int, ...] = (4, 8, 12)
    compound_normalize: bool = False
    # similarity metrics
    metric_suite: tuple[str, ...] = METRIC_NAMES
    rank_tol: float = 1e-10
    # boosting
    boosting_rounds: int = 150
    # seeding
    seed: int = 0

    def __post_init__(self):
        if min(self.image_size, self.block_size, self.block_step,
               self.descriptor_dim, self.dictionary_size, self.region_size,
               self.region_stride, self.boosting_rounds) <= 0:
            raise ValueError("all size/count parameters must be positive")
        if self.block_size > self.image_size:
            raise ValueError("block does not fit inside image")
        if self.region_size > self.image_size:
            raise ValueError("region does not fit inside image")
        if any(o <= 0 for o in self.compound_offsets):
            raise ValueError("compound offsets must be positive")
        if tuple(sorted(self.compound_offsets)) != tuple(self.compound_offsets):
            raise ValueError("compound offsets must be sorted ascending")
        unknown = set(self.metric_suite) - set(METRIC_NAMES)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        if not self.metric_suite:
            raise ValueError("metric suite must not be empty")

    @property
    def n_metrics(self) -> int:
        return len(self.metric_suite)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["compound_offsets"] = list(self.compound_offsets)
        d["metric_suite"] = list(self.metric_suite)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(d)
        if "compound_offsets" in kwargs:
            kwargs["compound_offsets"] = tuple(kwargs["compound_offsets"])
        if "metric_suite" in kwargs:
            kwargs["metric_suite"] = tuple(kwargs["metric_suite"])
        return cls(**kwargs)

    def layout_fingerprint(self) -> str:
        """Hash of every parameter that shapes the similarity vector.

        Features are addressed by raw index in trained models, so any change
        to the geometry, dictionary size or metric suite must invalidate the
        pairing between model and features.
        """
        relevant = {
            "image_size": self.image_size,
            "block_size": self.block_size,
            "block_step": self.block_step,
            "descriptor_dim": self.descriptor_dim,
            "descriptor_unit_variance": self.descriptor_unit_variance,
            "dictionary_size": self.dictionary_size,
            "region_size": self.region_size,
            "region_stride": self.region_stride,
            "compound_offsets": list(self.compound_offsets),
            "compound_normalize": self.compound_normalize,
            "metric_suite": list(self.metric_suite),
        }
        blob = json.dumps(relevant, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# Paper-parity defaults: 64x64 images, 24x24 regions at stride 1, offsets
# {4,8,12}, 1024 visual words, 150 boosting rounds.
PAPER_CONFIG = PipelineConfig()

# Small configuration for desk-scale experiments and tests: coarser region
# grid and a small dictionary keep end-to-end runs in the seconds range.
DESK_CONFIG = PipelineConfig(
    dictionary_size=64,
    region_stride=4,
    boosting_rounds=50,
    em_max_iters=60,
    em_tol=1e-5,
)
