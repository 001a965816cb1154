"""Command-line pipeline: synth -> preprocess -> features -> select -> train -> evaluate.

Every command is idempotent given identical inputs and seed; all
randomness derives from the global seed via per-stage derivation. Exit
codes: 0 success, 1 validation error (bad config, missing upstream
artifact), 2 unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dsp, selection, spectral, store, svm
from .config import apply_overrides, config_from_dict, load_config
from .errors import ConfigError, MissingFile, PipelineError
from .experiments import (
    CnnClassifier,
    SvmClassifier,
    epochs_to_arrays,
    evaluate,
    label_expertise,
)
from .formats import load_recording, save_recording, write_report
from .nn import history_csv, load_checkpoint, save_checkpoint, train_cnn
from .seeding import derive_seed
from .synth import synth_generate

SCHEME_FLAGS = {
    "independent": "SubjectIndependent",
    "loso": "SubjectDependent",
    "expert": "Expert",
    "novice": "Novice",
}


def _load_cfg(args):
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        base = path.parent
    else:
        raw, base = {}, Path(".")
    apply_overrides(raw, args.set)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.dataset_dir is not None:
        raw["dataset_dir"] = args.dataset_dir
        base_ds = Path(".")
        cfg = config_from_dict(raw, base_dir=base)
        cfg.dataset_dir = base_ds / args.dataset_dir
    else:
        cfg = config_from_dict(raw, base_dir=base)
    if args.output_dir is not None:
        cfg.output_dir = Path(args.output_dir)
    return cfg


def _dataset_index(cfg):
    return cfg.dataset_dir / "dataset.json"


def _load_dataset(cfg):
    index = _dataset_index(cfg)
    if not index.is_file():
        raise MissingFile(f"dataset index not found: {index} (run `eegtask synth` first)")
    names = json.loads(index.read_text())["recordings"]
    return [load_recording(cfg.dataset_dir / name) for name in names]


def cmd_synth(cfg, args):
    recordings = synth_generate(cfg.synth, bands=cfg.bands)
    cfg.dataset_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for rec in recordings:
        manifest = save_recording(rec, cfg.dataset_dir)
        names.append(manifest.name)
    _dataset_index(cfg).write_text(json.dumps({"recordings": names}, indent=1) + "\n")
    print(f"synth: wrote {len(names)} recordings to {cfg.dataset_dir}")
    return 0


def cmd_preprocess(cfg, args):
    recordings = _load_dataset(cfg)
    epochs = []
    dropped_total = 0
    for rec in recordings:
        filtered = dsp.bandpass_filter(rec, cfg.filter)
        kept, dropped = dsp.reject_artifacts(
            dsp.epoch_signal(filtered), cfg.artifact_threshold_uv)
        epochs.extend(kept)
        dropped_total += dropped
    store.save_epoch_store(epochs, cfg.output_dir, dropped_count=dropped_total)
    print(f"preprocess: kept {len(epochs)} epochs, dropped {dropped_total}")
    return 0


def cmd_features(cfg, args):
    epochs, _ = store.load_epoch_store(cfg.output_dir)
    x, y, subjects = epochs_to_arrays(epochs)
    feats = spectral.extract_features_batch(
        x, epochs[0].channel_labels, cfg.electrodes, cfg.bands, cfg.welch)
    names = spectral.feature_names(cfg.electrodes, cfg.bands)
    store.save_feature_matrix(cfg.output_dir / "features.bin", names, feats, y, subjects)
    print(f"features: wrote {feats.shape[0]} x {feats.shape[1]} matrix")
    return 0


def cmd_select(cfg, args):
    names, x, y, _ = store.load_feature_matrix(cfg.output_dir / "features.bin")
    result = selection.rfe_stable(x, y, cfg.rfe)
    freq = dict(result.ranked)
    payload = {
        "selected": [int(j) for j in result.selected],
        "selected_names": [names[j] for j in result.selected],
        "frequency": {str(int(j)): int(c) for j, c in result.ranked if c > 0},
        "n_repeats": cfg.rfe.n_repeats,
    }
    (cfg.output_dir / "selection.json").write_text(json.dumps(payload, indent=1) + "\n")
    lines = ["pair | band | frequency"]
    for j in result.selected:
        pair, band = names[j].split(":")
        lines.append(f"{pair} | {cfg.band_label(band)} | {freq[j]}")
    (cfg.output_dir / "selection.txt").write_text("\n".join(lines) + "\n")
    print("select: " + ", ".join(names[j] for j in result.selected))
    return 0


def _svm_checkpoint(cfg):
    return cfg.output_dir / "svm_model.json"


def _cnn_checkpoint(cfg):
    return cfg.output_dir / "cnn_model.ckpt"


def _selected_indices(cfg):
    path = cfg.output_dir / "selection.json"
    if not path.is_file():
        raise MissingFile(f"selection not found: {path} (run `eegtask select` first)")
    payload = json.loads(path.read_text())
    return payload["selected"], payload


def cmd_train(cfg, args):
    if args.model == "svm":
        selected, _ = _selected_indices(cfg)
        _, x, y, _ = store.load_feature_matrix(cfg.output_dir / "features.bin")
        model = svm.train_multiclass(
            x[:, selected], y, kernel=cfg.svm.kernel, c=cfg.svm.c,
            tol=cfg.svm.tol, max_passes=cfg.svm.max_passes)
        svm.save_multiclass(model, _svm_checkpoint(cfg))
        print(f"train: wrote {_svm_checkpoint(cfg)}")
    else:
        epochs, _ = store.load_epoch_store(cfg.output_dir)
        model = train_cnn(epochs, cfg.train)
        save_checkpoint(model.net, _cnn_checkpoint(cfg))
        (cfg.output_dir / "cnn_history.csv").write_text(history_csv(model.history))
        best = model.best_val_accuracy
        print(f"train: wrote {_cnn_checkpoint(cfg)} (best val accuracy {best:.3f})")
    return 0


def _expertise_subject_sets(cfg):
    recordings = _load_dataset(cfg)
    experts, novices = label_expertise(recordings)
    return set(experts), set(novices)


def cmd_evaluate(cfg, args):
    scheme = SCHEME_FLAGS[args.scheme]
    checkpoint = _svm_checkpoint(cfg) if args.model == "svm" else _cnn_checkpoint(cfg)
    if not checkpoint.is_file():
        raise MissingFile(
            f"model checkpoint not found: {checkpoint} (run `eegtask train --model {args.model}` first)")

    selected_features = []
    if args.model == "svm":
        selected, payload = _selected_indices(cfg)
        names, x, y, subjects = store.load_feature_matrix(cfg.output_dir / "features.bin")
        x = x[:, selected]
        for j in selected:
            pair, band = names[j].split(":")
            selected_features.append(
                (pair, cfg.band_label(band), payload["frequency"].get(str(j), 0)))
        classifier = SvmClassifier(kernel=cfg.svm.kernel, c=cfg.svm.c,
                                   tol=cfg.svm.tol, max_passes=cfg.svm.max_passes)
    else:
        epochs, _ = store.load_epoch_store(cfg.output_dir)
        x, y, subjects = epochs_to_arrays(epochs)
        classifier = CnnClassifier(cfg.train)

    if scheme in ("Expert", "Novice"):
        experts, novices = _expertise_subject_sets(cfg)
        group = experts if scheme == "Expert" else novices
        mask = np.isin(subjects, sorted(group))
        if not mask.any():
            raise PipelineError(f"no epochs belong to the {scheme.lower()} group")
        x, y, subjects = x[mask], y[mask], subjects[mask]

    report = evaluate(
        classifier, x, y, subjects, scheme,
        n_repeats=cfg.evaluate.n_repeats,
        seed=derive_seed(cfg.seed, "evaluate", scheme, args.model),
        train_fraction=cfg.evaluate.train_fraction,
        selected_features=selected_features,
    )
    stem = f"report_{args.scheme}_{args.model}"
    write_report(report, cfg.output_dir / f"{stem}.txt")
    (cfg.output_dir / f"{stem}.json").write_text(json.dumps({
        "scheme": report.scheme,
        "classifier": report.classifier,
        "n_repeats": report.n_repeats,
        "accuracy_mean": report.accuracy_mean,
        "accuracy_std": report.accuracy_std,
        "confusion": report.confusion.tolist(),
        "selected_features": [list(f) for f in report.selected_features],
    }, indent=1) + "\n")
    print(f"evaluate: accuracy {report.accuracy_mean:.4f} ± {report.accuracy_std:.4f} "
          f"-> {cfg.output_dir / (stem + '.txt')}")
    return 0


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file (strict keys)")
    parser.add_argument("--seed", type=int, default=None, help="override the global seed")
    parser.add_argument("--dataset-dir", default=None, help="override dataset_dir")
    parser.add_argument("--output-dir", default=None, help="override output_dir")
    parser.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override any config key, e.g. --set synth.snr=2.5")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eegtask",
        description="EEG task-difficulty classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic dataset")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="filter, epoch and reject artifacts")
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features", help="extract coherence features per epoch")
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("select", help="stability-vote recursive feature elimination")
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="train a classifier on the full dataset")
    _add_common(p)
    p.add_argument("--model", choices=("svm", "cnn"), required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="repeated evaluation under a splitting scheme")
    _add_common(p)
    p.add_argument("--model", choices=("svm", "cnn"), required=True)
    p.add_argument("--scheme", choices=tuple(SCHEME_FLAGS), required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_cfg(args)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        return args.func(cfg, args)
    except PipelineError as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2 per contract
        print(f"{args.command}: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
