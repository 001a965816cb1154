"""Recording/report file formats.

A recording is stored as two files: a JSON manifest and a flat binary
blob of little-endian float32 samples, row-major ``[channel][sample]``.
The manifest must state byte order and element type explicitly; a
manifest missing either is rejected.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    IoFailure,
    LengthMismatch,
    ManifestError,
    MissingFile,
    OverlappingEvents,
    UnknownChannelLabel,
    ZeroTestSet,
)
from .montage import MONTAGE

DIFFICULTY_NAMES = {0: "None", 1: "Static", 2: "Dynamic"}

EVAL_SCHEMES = ("SubjectIndependent", "SubjectDependent", "Expert", "Novice")
CLASSIFIERS = ("SVM", "CNN")


@dataclass
class Event:
    """A labeled mission segment: [onset_sample, offset_sample) with difficulty 0/1/2."""

    onset: int
    offset: int
    difficulty: int

    def __post_init__(self):
        if not (0 <= self.onset < self.offset):
            raise ValueError(f"event must satisfy 0 <= onset < offset, got [{self.onset}, {self.offset})")
        if self.difficulty not in (0, 1, 2):
            raise ValueError(f"difficulty must be 0, 1 or 2, got {self.difficulty}")


@dataclass
class Recording:
    """Multichannel EEG with montage labels, labeled events, and skill-test scores."""

    subject_id: str
    sample_rate_hz: int
    channel_labels: tuple
    samples: np.ndarray  # float32 [n_channels, n_samples], microvolts
    events: list = field(default_factory=list)
    mot_score: float = 0.0
    vs_score: float = 0.0

    def __post_init__(self):
        self.channel_labels = tuple(self.channel_labels)
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a 2-D [channel, sample] matrix")
        if not (isinstance(self.sample_rate_hz, (int, np.integer)) and self.sample_rate_hz > 0):
            raise ValueError(f"sample_rate_hz must be a positive integer, got {self.sample_rate_hz}")
        for lab in self.channel_labels:
            if lab not in MONTAGE:
                raise UnknownChannelLabel(f"unknown channel label {lab!r}")
        if len(set(self.channel_labels)) != len(self.channel_labels):
            raise ValueError("duplicate channel labels")
        if len(self.channel_labels) != self.samples.shape[0]:
            raise LengthMismatch(
                f"{len(self.channel_labels)} labels but {self.samples.shape[0]} sample rows"
            )
        if not (0.0 <= self.mot_score <= 1.0 and 0.0 <= self.vs_score <= 1.0):
            raise ValueError("mot_score and vs_score must lie in [0, 1]")
        n = self.samples.shape[1]
        prev_end = None
        for ev in sorted(self.events, key=lambda e: e.onset):
            if ev.offset > n:
                raise ValueError(f"event [{ev.onset}, {ev.offset}) exceeds {n} samples")
            if prev_end is not None and ev.onset < prev_end:
                raise OverlappingEvents(f"event at {ev.onset} overlaps previous event ending at {prev_end}")
            prev_end = ev.offset

    @property
    def n_channels(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]


def _safe_name(subject_id: str) -> str:
    name = re.sub(r"[^A-Za-z0-9_.-]", "_", subject_id)
    return name or "recording"


def save_recording(rec: Recording, out_dir) -> Path:
    """Write manifest + raw f32 data; returns the manifest path.

    The round trip load(save(rec)) reproduces every field bit-exactly.
    """
    out_dir = Path(out_dir)
    base = _safe_name(rec.subject_id)
    manifest_path = out_dir / f"{base}.json"
    data_name = f"{base}.f32"
    manifest = {
        "subject_id": rec.subject_id,
        "sample_rate_hz": int(rec.sample_rate_hz),
        "channel_labels": list(rec.channel_labels),
        "n_samples": int(rec.n_samples),
        "data_file": data_name,
        "byte_order": "little",
        "dtype": "f32",
        "events": [
            {"onset": int(e.onset), "offset": int(e.offset), "difficulty": int(e.difficulty)}
            for e in rec.events
        ],
        "mot_score": float(rec.mot_score),
        "vs_score": float(rec.vs_score),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / data_name).write_bytes(rec.samples.astype("<f4", copy=False).tobytes())
        manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")
    except OSError as exc:
        raise IoFailure(f"failed writing recording to {out_dir}: {exc}") from exc
    return manifest_path


_MANIFEST_FIELDS = (
    "subject_id", "sample_rate_hz", "channel_labels", "n_samples",
    "data_file", "byte_order", "dtype", "events", "mot_score", "vs_score",
)


def load_recording(manifest_path) -> Recording:
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise MissingFile(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"unreadable manifest {manifest_path}: {exc}") from exc
    for key in _MANIFEST_FIELDS:
        if key not in manifest:
            raise ManifestError(f"manifest {manifest_path} lacks required field {key!r}")
    if manifest["byte_order"] != "little":
        raise ManifestError(f"unsupported byte order {manifest['byte_order']!r}")
    if manifest["dtype"] != "f32":
        raise ManifestError(f"unsupported dtype {manifest['dtype']!r}")

    labels = tuple(manifest["channel_labels"])
    n_channels = len(labels)
    n_samples = int(manifest["n_samples"])
    data_path = manifest_path.parent / manifest["data_file"]
    if not data_path.is_file():
        raise MissingFile(f"data file not found: {data_path}")
    raw = data_path.read_bytes()
    expected = n_channels * n_samples * 4
    if len(raw) != expected:
        raise LengthMismatch(
            f"{data_path} holds {len(raw)} bytes, expected {expected} "
            f"({n_channels} channels x {n_samples} samples x 4)"
        )
    samples = np.frombuffer(raw, dtype="<f4").reshape(n_channels, n_samples).astype(np.float32)
    events = [Event(int(e["onset"]), int(e["offset"]), int(e["difficulty"])) for e in manifest["events"]]
    return Recording(
        subject_id=manifest["subject_id"],
        sample_rate_hz=int(manifest["sample_rate_hz"]),
        channel_labels=labels,
        samples=samples,
        events=events,
        mot_score=float(manifest["mot_score"]),
        vs_score=float(manifest["vs_score"]),
    )


@dataclass
class EvalReport:
    """Accuracy mean±std over repeats, pooled confusion matrix, selected features."""

    scheme: str
    classifier: str
    accuracy_mean: float
    accuracy_std: float
    confusion: np.ndarray  # [3, 3] counts, rows = true class, cols = predicted
    selected_features: list = field(default_factory=list)  # (pair, band, frequency_count)
    n_repeats: int = 1

    def __post_init__(self):
        if self.scheme not in EVAL_SCHEMES:
            raise ValueError(f"scheme must be one of {EVAL_SCHEMES}, got {self.scheme!r}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        self.confusion = np.asarray(self.confusion, dtype=np.int64)
        if self.confusion.shape != (3, 3):
            raise ValueError("confusion matrix must be 3x3")
        if not (0.0 <= self.accuracy_mean <= 1.0):
            raise ValueError("accuracy_mean must lie in [0, 1]")


def format_accuracy(mean: float, std: float) -> str:
    """Render accuracy as percent, e.g. mean 0.8380, std 0.0142 -> '83.80±1.42'."""
    return f"{mean * 100:.2f}±{std * 100:.2f}"


def write_report(report: EvalReport, path) -> None:
    """Write a human-readable, re-parseable report file."""
    if int(report.confusion.sum()) == 0:
        raise ZeroTestSet("report has an all-zero confusion matrix (no test samples)")
    lines = [
        f"scheme: {report.scheme}",
        f"classifier: {report.classifier}",
        f"repeats: {report.n_repeats}",
        f"accuracy: {format_accuracy(report.accuracy_mean, report.accuracy_std)}",
        "confusion (rows=true, cols=predicted):",
    ]
    for row in report.confusion:
        lines.append("  " + " ".join(str(int(v)) for v in row))
    lines.append("selected features:")
    for pair, band, count in report.selected_features:
        lines.append(f"{pair} | {band} | {count}")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"failed writing report to {path}: {exc}") from exc


def parse_report(path) -> EvalReport:
    """Read back a file produced by write_report."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoFailure(f"failed reading report {path}: {exc}") from exc
    fields = {}
    confusion = []
    features = []
    mode = "header"
    for line in lines:
        if line.startswith("confusion"):
            mode = "confusion"
            continue
        if line.startswith("selected features:"):
            mode = "features"
            continue
        if mode == "header" and ":" in line:
            key, val = line.split(":", 1)
            fields[key.strip()] = val.strip()
        elif mode == "confusion" and line.strip():
            confusion.append([int(v) for v in line.split()])
        elif mode == "features" and line.strip():
            pair, band, count = (part.strip() for part in line.split("|"))
            features.append((pair, band, int(count)))
    mean_s, std_s = fields["accuracy"].split("±")
    return EvalReport(
        scheme=fields["scheme"],
        classifier=fields["classifier"],
        accuracy_mean=float(mean_s) / 100.0,
        accuracy_std=float(std_s) / 100.0,
        confusion=np.array(confusion, dtype=np.int64),
        selected_features=features,
        n_repeats=int(fields["repeats"]),
    )
