"""Pipeline configuration: strict JSON with defaults for every knob.

Unknown keys are fatal anywhere in the tree; a typo in a band edge must
not silently corrupt results. All stages derive their randomness from
the single global seed (see seeding.py).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dsp import FilterSpec
from .errors import ConfigError
from .montage import ELECTRODE_SUBSET, MONTAGE
from .nn.training import TrainConfig
from .selection import RfeConfig
from .spectral import BandSpec, WelchSpec, default_bands
from .svm import KernelSpec
from .synth import SynthConfig


@dataclass
class SvmParams:
    kernel: KernelSpec = field(default_factory=KernelSpec)
    c: float = 1.0
    tol: float = 1e-3
    max_passes: int = 1000


@dataclass
class EvalParams:
    n_repeats: int = 10
    train_fraction: float = 2.0 / 3.0


@dataclass
class PipelineConfig:
    seed: int = 0
    dataset_dir: Path = Path("dataset")
    output_dir: Path = Path("out")
    filter: FilterSpec = field(default_factory=FilterSpec)
    welch: WelchSpec = field(default_factory=WelchSpec)
    bands: list = field(default_factory=default_bands)
    electrodes: tuple = ELECTRODE_SUBSET
    artifact_threshold_uv: float = 200.0
    rfe: RfeConfig = field(default_factory=RfeConfig)
    svm: SvmParams = field(default_factory=SvmParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    evaluate: EvalParams = field(default_factory=EvalParams)

    def band_label(self, band_name: str) -> str:
        for band in self.bands:
            if band.name == band_name:
                return band.label()
        raise ConfigError(f"unknown band {band_name!r}")


def _take(section: dict, path: str, allowed) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in config section {path!r}")


def _build_bands(entries):
    bands = []
    for k, entry in enumerate(entries):
        _take(entry, f"bands[{k}]", ("name", "lo_hz", "hi_hz"))
        bands.append(BandSpec(str(entry["name"]), float(entry["lo_hz"]), float(entry["hi_hz"])))
    return bands


def _build_planted(raw):
    planted = {}
    for key, val in raw.items():
        if str(key) not in ("0", "1", "2") or len(val) != 3:
            raise ConfigError(f"planted map entries must be class -> [el_a, el_b, band], got {key}: {val}")
        planted[int(key)] = (str(val[0]), str(val[1]), str(val[2]))
    return planted


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    _take(raw, "<root>", (
        "seed", "dataset_dir", "output_dir", "filter", "welch", "bands",
        "electrodes", "artifact_threshold_uv", "rfe", "svm", "train",
        "synth", "evaluate",
    ))
    cfg = PipelineConfig()
    try:
        cfg.seed = int(raw.get("seed", cfg.seed))
        if "dataset_dir" in raw:
            cfg.dataset_dir = base_dir / raw["dataset_dir"]
        else:
            cfg.dataset_dir = base_dir / cfg.dataset_dir
        if "output_dir" in raw:
            cfg.output_dir = base_dir / raw["output_dir"]
        else:
            cfg.output_dir = base_dir / cfg.output_dir

        if "filter" in raw:
            _take(raw["filter"], "filter", ("low_hz", "high_hz", "order", "zero_phase"))
            cfg.filter = FilterSpec(**raw["filter"])
        if "welch" in raw:
            _take(raw["welch"], "welch", ("segment_len", "overlap", "window"))
            cfg.welch = WelchSpec(**raw["welch"])
        if "bands" in raw:
            cfg.bands = _build_bands(raw["bands"])
        if "electrodes" in raw:
            for el in raw["electrodes"]:
                if el not in MONTAGE:
                    raise ConfigError(f"unknown electrode {el!r} in config")
            cfg.electrodes = tuple(raw["electrodes"])
        cfg.artifact_threshold_uv = float(raw.get("artifact_threshold_uv", cfg.artifact_threshold_uv))
        if "rfe" in raw:
            _take(raw["rfe"], "rfe", ("target_k", "drop_fraction", "n_repeats", "seed"))
            cfg.rfe = RfeConfig(**{**raw["rfe"], "seed": raw["rfe"].get("seed", cfg.seed)})
        else:
            cfg.rfe = RfeConfig(seed=cfg.seed)
        if "svm" in raw:
            _take(raw["svm"], "svm", ("kernel", "gamma", "c", "tol", "max_passes"))
            kernel = KernelSpec(kind=raw["svm"].get("kernel", "rbf"),
                                gamma=raw["svm"].get("gamma"))
            cfg.svm = SvmParams(kernel=kernel,
                                c=float(raw["svm"].get("c", 1.0)),
                                tol=float(raw["svm"].get("tol", 1e-3)),
                                max_passes=int(raw["svm"].get("max_passes", 1000)))
        if "train" in raw:
            _take(raw["train"], "train", (
                "learning_rate", "beta1", "beta2", "adam_eps", "batch_size",
                "max_epochs", "patience", "validation_fraction", "dtype",
            ))
            cfg.train = TrainConfig(**{**raw["train"], "seed": cfg.seed})
        else:
            cfg.train = TrainConfig(seed=cfg.seed)
        if "synth" in raw:
            _take(raw["synth"], "synth", (
                "n_subjects", "epochs_per_class_per_subject", "snr", "planted", "n_experts",
            ))
            kwargs = dict(raw["synth"])
            if "planted" in kwargs:
                kwargs["planted"] = _build_planted(kwargs["planted"])
            cfg.synth = SynthConfig(**{**kwargs, "seed": cfg.seed})
        else:
            cfg.synth = SynthConfig(seed=cfg.seed)
        if "evaluate" in raw:
            _take(raw["evaluate"], "evaluate", ("n_repeats", "train_fraction"))
            cfg.evaluate = EvalParams(
                n_repeats=int(raw["evaluate"].get("n_repeats", 10)),
                train_fraction=float(raw["evaluate"].get("train_fraction", 2.0 / 3.0)),
            )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def apply_overrides(cfg_dict: dict, overrides) -> dict:
    """Apply --set SECTION.KEY=VALUE (or KEY=VALUE) strings onto a raw config dict."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key_path, value = item.split("=", 1)
        keys = key_path.split(".")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = cfg_dict
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {key_path!r}: {k!r} is not a section")
        node[keys[-1]] = parsed
    return cfg_dict
