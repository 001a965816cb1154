import numpy as np
import pytest
from scipy import signal as sps

from eegtask.dsp import (
    EPOCH_SAMPLES,
    Epoch,
    FilterSpec,
    bandpass_filter,
    design_bandpass,
    epoch_signal,
    filter_array,
    reject_artifacts,
)
from eegtask.errors import BandOutOfRange, NoEvents, TooShort
from eegtask.formats import Event, Recording
from eegtask.montage import MONTAGE

FS = 256.0


def sine(freq, n, phase=0.0, fs=FS):
    return np.sin(2 * np.pi * freq * np.arange(n) / fs + phase)


def test_passband_10hz_amplitude():
    # analytic |H(10 Hz)|^2 of the designed filter is ~1; measured mid-signal
    # amplitude must sit in [0.95, 1.0]
    sos = design_bandpass(FilterSpec(), FS)
    _, h = sps.sosfreqz(sos, worN=[10 / (FS / 2) * np.pi])
    assert 0.95 <= np.abs(h[0]) ** 2 <= 1.0
    n = 15360  # 60 s: edge transients decay well before the middle
    y = filter_array(sine(10.0, n, phase=1.1), FilterSpec(), FS)
    mid = y[n // 2 - 1024: n // 2 + 1024]
    amp = np.max(np.abs(mid))
    assert 0.95 <= amp <= 1.0


def test_stopband_120hz_rms():
    sos = design_bandpass(FilterSpec(), FS)
    _, h = sps.sosfreqz(sos, worN=[120 / (FS / 2) * np.pi])
    assert np.abs(h[0]) ** 2 < 1e-4  # two passes attenuate even harder
    x = sine(120.0, 2048, phase=0.3)
    y = filter_array(x, FilterSpec(), FS)
    assert np.sqrt(np.mean(y**2)) < 0.1 * np.sqrt(np.mean(x**2))


def test_dc_rejected():
    y = filter_array(np.full(2048, 7.0), FilterSpec(), FS)
    assert np.sqrt(np.mean(y**2)) < 0.05 * 7.0


def test_linearity():
    rng = np.random.default_rng(3)
    x = rng.normal(size=4096)
    y = rng.normal(size=4096)
    spec = FilterSpec()
    lhs = filter_array(2.5 * x - 1.25 * y, spec, FS)
    rhs = 2.5 * filter_array(x, spec, FS) - 1.25 * filter_array(y, spec, FS)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * np.max(np.abs(rhs))


def test_palindromic_symmetry():
    rng = np.random.default_rng(4)
    x = rng.normal(size=4096)
    spec = FilterSpec()
    fwd = filter_array(x, spec, FS)
    rev = filter_array(x[::-1], spec, FS)[::-1]
    assert np.max(np.abs(fwd - rev)) <= 1e-9 * max(1.0, np.max(np.abs(fwd)))


def test_band_out_of_range():
    with pytest.raises(BandOutOfRange):
        design_bandpass(FilterSpec(low_hz=0.1, high_hz=130.0), FS)
    with pytest.raises(BandOutOfRange):
        design_bandpass(FilterSpec(low_hz=50.0, high_hz=10.0), FS)


def test_too_short_signal():
    with pytest.raises(TooShort):
        filter_array(np.zeros(12), FilterSpec(order=4), FS)


def test_filter_recording_channelwise():
    rng = np.random.default_rng(5)
    rec = Recording("s01", 256, MONTAGE, rng.normal(0, 10, (20, 2048)).astype(np.float32),
                    events=[Event(0, 2048, 0)])
    out = bandpass_filter(rec)
    assert out.samples.shape == rec.samples.shape
    assert out.samples.dtype == np.float32
    # channel 0 filtered independently: matches the 1-D path
    solo = filter_array(rec.samples[0].astype(np.float64), FilterSpec(), FS)
    np.testing.assert_allclose(out.samples[0], solo.astype(np.float32), rtol=0, atol=1e-4)


def make_rec(events, n=4096):
    rng = np.random.default_rng(6)
    return Recording("s02", 256, MONTAGE, rng.normal(0, 10, (20, n)).astype(np.float32),
                     events=events)


def test_epoching_counts_and_labels():
    rec = make_rec([Event(0, 2048, 2)])
    eps = epoch_signal(rec)
    assert len(eps) == 4
    assert all(ep.difficulty == 2 for ep in eps)
    assert all(ep.subject_id == "s02" for ep in eps)


def test_epoching_drops_remainder():
    rec = make_rec([Event(100, 700, 1)])  # 600 samples -> one window
    eps = epoch_signal(rec)
    assert len(eps) == 1
    np.testing.assert_array_equal(eps[0].samples, rec.samples[:, 100:612])


def test_epoching_onset_order():
    rec = make_rec([Event(512, 1024, 1), Event(0, 512, 0)])
    eps = epoch_signal(rec)
    assert [ep.difficulty for ep in eps] == [0, 1]


def test_epoching_partition_exact():
    for length in (512, 600, 1023, 1024, 2047, 3000):
        rec = make_rec([Event(0, length, 0)])
        eps = epoch_signal(rec)
        kept = len(eps) * EPOCH_SAMPLES
        assert kept + (length - kept) == length
        assert length - kept < EPOCH_SAMPLES


def test_epoching_requires_events_and_256hz():
    with pytest.raises(NoEvents):
        epoch_signal(make_rec([]))
    rec = make_rec([Event(0, 512, 0)])
    rec.sample_rate_hz = 128
    with pytest.raises(ValueError):
        epoch_signal(rec)


def make_epoch(scale=50.0, spike=None):
    rng = np.random.default_rng(8)
    x = rng.uniform(-scale, scale, (20, EPOCH_SAMPLES)).astype(np.float32)
    if spike is not None:
        x[4, 100] = spike
        x[4, 101] = -spike
    return Epoch("s", MONTAGE, x, 0)


def test_reject_keeps_small_amplitudes():
    kept, dropped = reject_artifacts([make_epoch(50.0)], 200.0)
    assert len(kept) == 1 and dropped == 0


def test_reject_drops_large_peak_to_peak():
    kept, dropped = reject_artifacts([make_epoch(spike=150.0)], 200.0)  # ptp 300
    assert kept == [] and dropped == 1


def test_reject_counts_injected_spikes():
    rng = np.random.default_rng(9)
    epochs = []
    for k in range(100):
        x = rng.uniform(-50, 50, (20, EPOCH_SAMPLES)).astype(np.float32)
        if k % 10 == 3:  # 10 epochs get +-500 uV spikes
            x[rng.integers(0, 20), rng.integers(0, EPOCH_SAMPLES)] = 500.0
        epochs.append(Epoch("s", MONTAGE, x, k % 3))
    kept, dropped = reject_artifacts(epochs, 200.0)
    assert dropped == 10
    assert len(kept) == 90
    kept_ids = [id(e) for e in kept]
    original_order = [id(e) for e in epochs if id(e) in set(kept_ids)]
    assert kept_ids == original_order
