import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegtask.errors import (
    LengthMismatch,
    ManifestError,
    MissingFile,
    OverlappingEvents,
    UnknownChannelLabel,
    ZeroTestSet,
)
from eegtask.formats import (
    EvalReport,
    Event,
    Recording,
    format_accuracy,
    load_recording,
    parse_report,
    save_recording,
    write_report,
)
from eegtask.montage import MONTAGE


def make_recording(n_samples=512, events=None, samples=None):
    rng = np.random.default_rng(0)
    if samples is None:
        samples = rng.normal(0, 10, (20, n_samples)).astype(np.float32)
    return Recording(
        subject_id="s01",
        sample_rate_hz=256,
        channel_labels=MONTAGE,
        samples=samples,
        events=events if events is not None else [Event(0, n_samples, 1)],
        mot_score=0.7,
        vs_score=0.4,
    )


def test_round_trip_identity(tmp_path):
    rec = make_recording()
    manifest = save_recording(rec, tmp_path)
    back = load_recording(manifest)
    assert back.subject_id == rec.subject_id
    assert back.sample_rate_hz == rec.sample_rate_hz
    assert back.channel_labels == rec.channel_labels
    assert back.samples.tobytes() == rec.samples.tobytes()
    assert [(e.onset, e.offset, e.difficulty) for e in back.events] == [
        (e.onset, e.offset, e.difficulty) for e in rec.events]
    assert back.mot_score == rec.mot_score and back.vs_score == rec.vs_score


def test_round_trip_preserves_nan_bits(tmp_path):
    samples = np.random.default_rng(1).normal(0, 10, (20, 64)).astype(np.float32)
    samples[3, 17] = np.float32("nan")
    rec = make_recording(n_samples=64, samples=samples)
    back = load_recording(save_recording(rec, tmp_path))
    assert back.samples.tobytes() == samples.tobytes()
    assert np.isnan(back.samples[3, 17])


def test_round_trip_empty_events(tmp_path):
    rec = make_recording(events=[])
    back = load_recording(save_recording(rec, tmp_path))
    assert back.events == []


@settings(max_examples=25, deadline=None)
@given(
    n_channels=st.integers(1, 20),
    n_samples=st.integers(1, 200),
    seed=st.integers(0, 2**31),
    mot=st.floats(0, 1),
    vs=st.floats(0, 1),
)
def test_round_trip_randomized(tmp_path_factory, n_channels, n_samples, seed, mot, vs):
    rng = np.random.default_rng(seed)
    labels = tuple(rng.choice(MONTAGE, size=n_channels, replace=False))
    events = []
    if n_samples >= 2:
        split = int(rng.integers(1, n_samples))
        events = [Event(0, split, int(rng.integers(0, 3)))]
        if split < n_samples:
            events.append(Event(split, n_samples, int(rng.integers(0, 3))))
    rec = Recording(
        subject_id=f"subj{seed % 100}",
        sample_rate_hz=256,
        channel_labels=labels,
        samples=rng.normal(0, 50, (n_channels, n_samples)).astype(np.float32),
        events=events,
        mot_score=mot,
        vs_score=vs,
    )
    out = tmp_path_factory.mktemp("roundtrip")
    back = load_recording(save_recording(rec, out))
    assert back.samples.tobytes() == rec.samples.tobytes()
    assert back.channel_labels == rec.channel_labels
    assert len(back.events) == len(rec.events)


def test_length_mismatch_rejected(tmp_path):
    rec = make_recording()
    manifest = save_recording(rec, tmp_path)
    data_file = tmp_path / json.loads(manifest.read_text())["data_file"]
    data_file.write_bytes(data_file.read_bytes()[: 19 * 512 * 4])  # drop one channel row
    with pytest.raises(LengthMismatch):
        load_recording(manifest)


def test_unknown_channel_label_rejected(tmp_path):
    rec = make_recording()
    manifest = save_recording(rec, tmp_path)
    meta = json.loads(manifest.read_text())
    meta["channel_labels"][0] = "XX"
    manifest.write_text(json.dumps(meta))
    with pytest.raises(UnknownChannelLabel):
        load_recording(manifest)


@pytest.mark.parametrize("field", ["byte_order", "dtype"])
def test_manifest_missing_byte_order_or_dtype_rejected(tmp_path, field):
    manifest = save_recording(make_recording(), tmp_path)
    meta = json.loads(manifest.read_text())
    del meta[field]
    manifest.write_text(json.dumps(meta))
    with pytest.raises(ManifestError):
        load_recording(manifest)


def test_missing_files(tmp_path):
    with pytest.raises(MissingFile):
        load_recording(tmp_path / "nope.json")
    manifest = save_recording(make_recording(), tmp_path)
    (tmp_path / json.loads(manifest.read_text())["data_file"]).unlink()
    with pytest.raises(MissingFile):
        load_recording(manifest)


def test_overlapping_events_rejected():
    with pytest.raises(OverlappingEvents):
        make_recording(events=[Event(0, 300, 0), Event(200, 512, 1)])


def test_event_bounds_checked():
    with pytest.raises(ValueError):
        make_recording(events=[Event(0, 513, 0)])
    with pytest.raises(ValueError):
        Event(10, 10, 0)


def make_report(**kw):
    base = dict(
        scheme="SubjectIndependent",
        classifier="SVM",
        accuracy_mean=0.8380,
        accuracy_std=0.0142,
        confusion=np.array([[30, 2, 2], [3, 28, 3], [1, 2, 31]]),
        selected_features=[("Pz-O2", "8-10 Hz", 10)],
        n_repeats=10,
    )
    base.update(kw)
    return EvalReport(**base)


def test_report_accuracy_format(tmp_path):
    assert format_accuracy(0.8380, 0.0142) == "83.80±1.42"
    path = tmp_path / "report.txt"
    write_report(make_report(), path)
    text = path.read_text()
    assert "83.80±1.42" in text
    assert "Pz-O2 | 8-10 Hz" in text


def test_report_zero_test_set(tmp_path):
    rep = make_report(confusion=np.zeros((3, 3), dtype=int))
    with pytest.raises(ZeroTestSet):
        write_report(rep, tmp_path / "r.txt")


def test_report_parse_round_trip(tmp_path):
    rep = make_report()
    path = tmp_path / "report.txt"
    write_report(rep, path)
    back = parse_report(path)
    assert back.scheme == rep.scheme
    assert back.classifier == rep.classifier
    assert back.n_repeats == rep.n_repeats
    assert np.array_equal(back.confusion, rep.confusion)
    assert back.selected_features == rep.selected_features
    assert abs(back.accuracy_mean - rep.accuracy_mean) < 5e-5
    assert abs(back.accuracy_std - rep.accuracy_std) < 5e-5
