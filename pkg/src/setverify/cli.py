"""Command-line interface.

Subcommands: synth, train-dictionary, train, evaluate, verify, weight-map.
Reports go to stdout as JSON lines; diagnostics go to stderr and the exit
code is nonzero on failure.  Every pipeline parameter is available as a
flag, with precedence flag > --config file > built-in default.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import boosting, dataio, model_io, pipeline, synth
from .config import PipelineConfig
from .regions import RegionLayout


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_str_tuple(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


# config.py uses postponed annotations, so dataclass field types are strings
_FIELD_PARSERS = {
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "tuple[int, ...]": _parse_int_tuple,
    "tuple[str, ...]": _parse_str_tuple,
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="JSON",
                        help="JSON file with pipeline parameters")
    group = parser.add_argument_group("pipeline parameters (override --config)")
    for f in dataclasses.fields(PipelineConfig):
        type_name = f.type if isinstance(f.type, str) else f.type.__name__
        parser_type = _FIELD_PARSERS.get(type_name)
        if parser_type is None:
            continue
        group.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}",
                           type=parser_type, default=None, metavar="V")


def build_config(args: argparse.Namespace) -> PipelineConfig:
    values = PipelineConfig().to_dict()
    if getattr(args, "config", None):
        values.update(json.loads(Path(args.config).read_text()))
    for f in dataclasses.fields(PipelineConfig):
        override = getattr(args, f"cfg_{f.name}", None)
        if override is not None:
            values[f.name] = override
    return PipelineConfig.from_dict(values)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _cmd_synth(args) -> int:
    manifests = synth.synth_dataset(
        args.identities, args.sets_per_identity, args.images_per_set,
        args.seed, args.out,
        train_identities=args.train_identities,
        dev_identities=args.dev_identities,
        eval_identities=args.eval_identities,
        matched_pairs_per_split=args.matched_pairs_per_split,
        params=synth.SynthParams(
            image_size=args.size, identity_blend=args.identity_blend,
            smoothness=args.smoothness, contrast=args.contrast,
            max_translation=args.max_translation,
            illumination_offset=args.illumination_offset,
            illumination_gradient=args.illumination_gradient,
            noise_sigma=args.noise_sigma,
        ),
    )
    counts = {}
    for split, manifest in manifests.items():
        pairs = dataio.load_pairs_manifest(manifest)
        matched, mismatched = dataio.manifest_counts(pairs)
        counts[split] = {"matched": matched, "mismatched": mismatched}
    _emit({"event": "synth", "out": str(args.out),
           "manifests": {k: str(v) for k, v in manifests.items()},
           "pairs": counts})
    return 0


def _cmd_train_dictionary(args) -> int:
    cfg = build_config(args)
    pairs = dataio.load_pairs_manifest(args.train_pairs)
    train_dirs = {str(Path(d).resolve()) for d in pipeline.manifest_set_dirs(pairs)}
    for other in args.disjoint_from or []:
        other_pairs = dataio.load_pairs_manifest(other)
        other_dirs = {str(Path(d).resolve())
                      for d in pipeline.manifest_set_dirs(other_pairs)}
        overlap = train_dirs & other_dirs
        if overlap:
            raise ValueError(f"training manifest shares {len(overlap)} set "
                             f"dir(s) with {other}, e.g. {sorted(overlap)[0]}")
    dictionary = pipeline.train_dictionary_from_manifest(cfg, pairs)
    model_io.save_dictionary(cfg, dictionary, args.out)
    _emit({"event": "dictionary", "out": str(args.out),
           "components": dictionary.n_components,
           "iterations": len(dictionary.loglik_history),
           "final_loglik": dictionary.loglik_history[-1]})
    return 0


# parameters that a trained dictionary bakes in; they may not be overridden
# when boosting on top of it
_DICT_BOUND = ("block_size", "block_step", "descriptor_dim",
               "descriptor_unit_variance", "dictionary_size", "image_size")


def _cmd_train(args) -> int:
    dict_cfg, dictionary = model_io.load_dictionary(args.dictionary)
    values = dict_cfg.to_dict()
    for f in dataclasses.fields(PipelineConfig):
        override = getattr(args, f"cfg_{f.name}", None)
        if override is not None:
            if f.name in _DICT_BOUND and override != values[f.name]:
                raise ValueError(f"--{f.name.replace('_', '-')} conflicts with "
                                 f"the trained dictionary ({values[f.name]})")
            values[f.name] = override
    cfg = PipelineConfig.from_dict(values)
    train_pairs = dataio.load_pairs_manifest(args.train_pairs)
    dev_pairs = (train_pairs if args.dev_pairs == args.train_pairs
                 else dataio.load_pairs_manifest(args.dev_pairs))
    bundle, report = pipeline.train_verifier(cfg, dictionary, train_pairs,
                                             dev_pairs, args.workers)
    model_io.save_model(bundle, args.out)
    _emit({"event": "model", "out": str(args.out), **report})
    return 0


def _cmd_evaluate(args) -> int:
    bundle = model_io.load_model(args.model)
    pairs = dataio.load_pairs_manifest(args.pairs)
    extractor = extractor_b = None
    if args.translate_b:
        dx, dy = _parse_int_tuple(args.translate_b)
        extractor = pipeline.FeatureExtractor(bundle.config, bundle.dictionary)
        extractor_b = pipeline.FeatureExtractor(
            bundle.config, bundle.dictionary, extractor.layout,
            transform=lambda im: dataio.translate_image(im, dx, dy))
    report, scores, labels = pipeline.evaluate_pairs(bundle, pairs, args.workers,
                                                     extractor, extractor_b)
    if args.scores_csv:
        with open(args.scores_csv, "w", encoding="utf-8") as fh:
            fh.write("set_a,set_b,label,score,decision\n")
            for pair, score in zip(pairs, scores):
                decision = (dataio.MATCHED if score >= bundle.model.tau
                            else dataio.MISMATCHED)
                fh.write(f"{pair.set_a},{pair.set_b},{pair.label},"
                         f"{float(score)!r},{decision}\n")
    _emit({"event": "evaluation", "pairs_manifest": str(args.pairs), **report})
    return 0


def _cmd_verify(args) -> int:
    bundle = model_io.load_model(args.model)
    decision, score = pipeline.verify_sets(bundle, args.set_a, args.set_b)
    _emit({"event": "verification", "set_a": str(args.set_a),
           "set_b": str(args.set_b), "decision": decision,
           "score": score, "tau": bundle.model.tau})
    return 0


def _cmd_weight_map(args) -> int:
    bundle = model_io.load_model(args.model)
    layout = RegionLayout.from_config(bundle.config)
    wmap = boosting.cumulative_weight_map(bundle.model, layout)
    out = Path(args.out)
    peak = wmap.max()
    scaled = wmap / peak if peak > 0 else wmap
    dataio.save_image(scaled, out)
    sidecar = out.with_suffix(".f64")
    sidecar.write_bytes(np.ascontiguousarray(wmap, dtype="<f8").tobytes())
    _emit({"event": "weight_map", "out": str(out), "raw": str(sidecar),
           "max_weight": float(peak),
           "selected_features": len(bundle.model.stumps),
           "unique_features": bundle.model.unique_feature_count})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setverify",
        description="Image-set identity verification: train and run the "
                    "local-histogram / multi-metric / boosted-selection pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic identity dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--identities", type=int, default=10,
                   help="identities per split (see per-split overrides)")
    p.add_argument("--sets-per-identity", type=int, default=2)
    p.add_argument("--images-per-set", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-identities", type=int, default=None)
    p.add_argument("--dev-identities", type=int, default=None)
    p.add_argument("--eval-identities", type=int, default=None)
    p.add_argument("--matched-pairs-per-split", type=int, default=None)
    for f in dataclasses.fields(synth.SynthParams):
        flag = "--size" if f.name == "image_size" else f"--{f.name.replace('_', '-')}"
        p.add_argument(flag, dest=f.name if f.name != "image_size" else "size",
                       type=type(f.default), default=f.default)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train-dictionary",
                       help="train the visual dictionary on a manifest's images")
    _add_config_flags(p)
    p.add_argument("--train-pairs", required=True, metavar="MANIFEST")
    p.add_argument("--out", required=True)
    p.add_argument("--disjoint-from", action="append", metavar="MANIFEST",
                   help="fail if the training manifest shares set dirs with "
                        "this manifest (repeatable)")
    p.set_defaults(func=_cmd_train_dictionary)

    p = sub.add_parser("train", help="boost a verification model")
    _add_config_flags(p)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--train-pairs", required=True)
    p.add_argument("--dev-pairs", required=True,
                   help="pairs for tuning the decision threshold")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="report balanced accuracy on a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scores-csv", help="write per-pair scores to this CSV")
    p.add_argument("--translate-b", metavar="DX,DY",
                   help="translate every image of each pair's second set")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("verify", help="classify one pair of set directories")
    p.add_argument("--model", required=True)
    p.add_argument("set_a")
    p.add_argument("set_b")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("weight-map",
                       help="export the cumulative region-weight map")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output PGM path")
    p.set_defaults(func=_cmd_weight_map)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, IndexError) as exc:
        print(f"setverify: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
