"""On-disk artifacts passed between pipeline stages.

Epoch store: JSON sidecar + raw little-endian f32 blob [epoch][channel][sample].
Feature matrix: one text header line of feature names ending in "label",
then binary little-endian f32 rows (features + label); subject ids are a
plain-text sidecar with one id per row.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dsp import Epoch
from .errors import IoFailure, LengthMismatch, MissingFile


def save_epoch_store(epochs, directory, dropped_count: int = 0):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not epochs:
        raise ValueError("refusing to write an empty epoch store")
    labels = epochs[0].channel_labels
    blob = np.stack([ep.samples for ep in epochs]).astype("<f4")
    meta = {
        "n_epochs": len(epochs),
        "channel_labels": list(labels),
        "n_samples": int(blob.shape[2]),
        "dtype": "f32",
        "byte_order": "little",
        "dropped_count": int(dropped_count),
        "epochs": [{"subject_id": ep.subject_id, "difficulty": int(ep.difficulty)}
                   for ep in epochs],
    }
    try:
        (directory / "epochs.f32").write_bytes(blob.tobytes())
        (directory / "epochs.json").write_text(json.dumps(meta, indent=1) + "\n")
    except OSError as exc:
        raise IoFailure(f"failed writing epoch store to {directory}: {exc}") from exc
    return directory / "epochs.json"


def load_epoch_store(directory):
    directory = Path(directory)
    meta_path = directory / "epochs.json"
    if not meta_path.is_file():
        raise MissingFile(f"epoch store not found: {meta_path}")
    meta = json.loads(meta_path.read_text())
    blob_path = directory / "epochs.f32"
    if not blob_path.is_file():
        raise MissingFile(f"epoch data not found: {blob_path}")
    raw = blob_path.read_bytes()
    n = meta["n_epochs"]
    n_ch = len(meta["channel_labels"])
    n_samp = meta["n_samples"]
    if len(raw) != n * n_ch * n_samp * 4:
        raise LengthMismatch(f"epoch blob {blob_path} has unexpected size")
    data = np.frombuffer(raw, dtype="<f4").reshape(n, n_ch, n_samp)
    labels = tuple(meta["channel_labels"])
    epochs = [
        Epoch(subject_id=entry["subject_id"], channel_labels=labels,
              samples=data[i], difficulty=int(entry["difficulty"]))
        for i, entry in enumerate(meta["epochs"])
    ]
    return epochs, int(meta.get("dropped_count", 0))


def save_feature_matrix(path, names, features: np.ndarray, labels: np.ndarray,
                        subjects) -> None:
    path = Path(path)
    header = " ".join(list(names) + ["label"])
    rows = np.hstack([features, np.asarray(labels, dtype=np.float64)[:, None]]).astype("<f4")
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("utf-8") + b"\n")
            fh.write(rows.tobytes())
        path.with_suffix(path.suffix + ".subjects.txt").write_text(
            "\n".join(str(s) for s in subjects) + "\n")
    except OSError as exc:
        raise IoFailure(f"failed writing feature matrix to {path}: {exc}") from exc


def load_feature_matrix(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"feature matrix not found: {path}")
    raw = path.read_bytes()
    newline = raw.index(b"\n")
    header = raw[:newline].decode("utf-8").split()
    if not header or header[-1] != "label":
        raise IoFailure(f"feature matrix {path} lacks the trailing label column")
    names = header[:-1]
    width = len(header)
    body = raw[newline + 1:]
    if len(body) % (4 * width) != 0:
        raise LengthMismatch(f"feature matrix {path} has a truncated row")
    rows = np.frombuffer(body, dtype="<f4").reshape(-1, width)
    subjects_path = path.with_suffix(path.suffix + ".subjects.txt")
    if not subjects_path.is_file():
        raise MissingFile(f"subject sidecar not found: {subjects_path}")
    subjects = np.array(subjects_path.read_text().split())
    if len(subjects) != len(rows):
        raise LengthMismatch("subject sidecar row count does not match feature rows")
    return names, rows[:, :-1].astype(np.float64), rows[:, -1].astype(np.int64), subjects
