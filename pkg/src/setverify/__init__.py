"""Image-set identity verification.

Decides whether two sets of face-like images depict the same identity:
DCT texture descriptors over overlapping blocks are soft-assigned to a
Gaussian-mixture visual dictionary, pooled into direct and compound region
histograms, compared across sets with subspace (principal-angle) and
exemplar (Hausdorff-family) metrics, and the resulting similarity features
are selected and weighted by an adapted AdaBoost.
"""

from .config import DESK_CONFIG, PAPER_CONFIG, PipelineConfig
from .dictionary import VisualDictionary, posterior_histogram, train_dictionary
from .model_io import ModelBundle, load_dictionary, load_model, save_dictionary, save_model
from .regions import RegionLayout
from .similarity import SetFeatures, extract_set_features, similarity_vector

__version__ = "0.1.0"

__all__ = [
    "DESK_CONFIG",
    "PAPER_CONFIG",
    "PipelineConfig",
    "VisualDictionary",
    "train_dictionary",
    "posterior_histogram",
    "RegionLayout",
    "SetFeatures",
    "extract_set_features",
    "similarity_vector",
    "ModelBundle",
    "save_model",
    "load_model",
    "save_dictionary",
    "load_dictionary",
    "__version__",
]
