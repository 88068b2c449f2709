"""Self-contained, bit-exact model persistence.

Dictionary and verification-model files are versioned JSON documents.
Float arrays are base64-encoded little-endian float64 so that a model loads
back bit for bit; scalar parameters use C99 hex-float strings for the same
reason (and stay greppable).  Keys are sorted and indentation is fixed, so
identical training runs produce byte-identical files.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boosting import Stump, VerificationModel
from .config import PipelineConfig
from .dictionary import VisualDictionary

MODEL_FORMAT = "setverify-model"
DICTIONARY_FORMAT = "setverify-dictionary"
FORMAT_VERSION = 1
FLOAT_ENCODING = "base64(<f8) arrays, C99 hex-float scalars"


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape),
            "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(d: dict) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(d["data"]), dtype="<f8")
    return raw.reshape(d["shape"]).copy()


def encode_float(x: float) -> str:
    return float(x).hex()


def decode_float(s: str) -> float:
    return float.fromhex(s)


@dataclass
class ModelBundle:
    """Everything needed to verify a pair of image sets."""
    config: PipelineConfig
    dictionary: VisualDictionary
    model: VerificationModel


def _dictionary_doc(dictionary: VisualDictionary) -> dict:
    return {
        "n_components": dictionary.n_components,
        "dim": dictionary.dim,
        "weights": encode_array(dictionary.weights),
        "means": encode_array(dictionary.means),
        "variances": encode_array(dictionary.variances),
    }


def _dictionary_from_doc(doc: dict) -> VisualDictionary:
    return VisualDictionary(decode_array(doc["weights"]),
                            decode_array(doc["means"]),
                            decode_array(doc["variances"]))


def _dump(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def _load(path, expected_format: str) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != expected_format:
        raise ValueError(f"{path}: not a {expected_format} file "
                         f"(format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {doc.get('version')!r} "
                         f"(expected {FORMAT_VERSION})")
    return doc


def save_dictionary(config: PipelineConfig, dictionary: VisualDictionary,
                    path) -> None:
    doc = {
        "format": DICTIONARY_FORMAT,
        "version": FORMAT_VERSION,
        "float_encoding": FLOAT_ENCODING,
        "config": config.to_dict(),
        "dictionary": _dictionary_doc(dictionary),
        "loglik_history": [encode_float(v) for v in dictionary.loglik_history],
    }
    _dump(doc, path)


def load_dictionary(path) -> tuple[PipelineConfig, VisualDictionary]:
    doc = _load(path, DICTIONARY_FORMAT)
    config = PipelineConfig.from_dict(doc["config"])
    dictionary = _dictionary_from_doc(doc["dictionary"])
    dictionary.loglik_history = [decode_float(v) for v in doc.get("loglik_history", [])]
    if dictionary.n_components != config.dictionary_size:
        raise ValueError(f"{path}: dictionary has {dictionary.n_components} "
                         f"components but config says {config.dictionary_size}")
    return config, dictionary


def save_model(bundle: ModelBundle, path) -> None:
    model = bundle.model
    doc = {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "float_encoding": FLOAT_ENCODING,
        "config": bundle.config.to_dict(),
        "dictionary": _dictionary_doc(bundle.dictionary),
        "layout_fingerprint": model.layout_fingerprint,
        "metric_suite": list(model.metric_suite),
        "model": {
            "dim": model.dim,
            "tau": encode_float(model.tau),
            "stumps": [
                {
                    "feature": s.feature,
                    "threshold": encode_float(s.threshold),
                    "polarity": s.polarity,
                    "alpha": encode_float(s.alpha),
                    "error": encode_float(s.error),
                }
                for s in model.stumps
            ],
            "round_errors": [encode_float(e) for e in model.round_errors],
        },
    }
    _dump(doc, path)


def load_model(path) -> ModelBundle:
    doc = _load(path, MODEL_FORMAT)
    config = PipelineConfig.from_dict(doc["config"])
    dictionary = _dictionary_from_doc(doc["dictionary"])
    m = doc["model"]
    stumps = [
        Stump(s["feature"], decode_float(s["threshold"]), s["polarity"],
              decode_float(s["alpha"]), decode_float(s["error"]))
        for s in m["stumps"]
    ]
    model = VerificationModel(
        stumps, decode_float(m["tau"]), m["dim"],
        doc["layout_fingerprint"], tuple(doc["metric_suite"]),
        [decode_float(e) for e in m.get("round_errors", [])],
    )
    if model.layout_fingerprint != config.layout_fingerprint():
        raise ValueError(f"{path}: layout fingerprint does not match its config")
    if dictionary.n_components != config.dictionary_size:
        raise ValueError(f"{path}: dictionary size does not match its config")
    if tuple(doc["metric_suite"]) != config.metric_suite:
        raise ValueError(f"{path}: metric suite does not match its config")
    return ModelBundle(config, dictionary, model)
