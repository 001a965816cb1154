import numpy as np
import pytest
from scipy import signal as sps

from eegtask.dsp import Epoch
from eegtask.errors import MissingElectrode, TooShort
from eegtask.montage import ELECTRODE_SUBSET, MONTAGE
from eegtask.spectral import (
    WelchSpec,
    coherence,
    default_bands,
    extract_features,
    extract_features_batch,
    feature_index,
    welch_spectra,
)

FS = 256.0

# Monte Carlo oracle: mean magnitude coherence of independent white-noise
# pairs (512-sample epochs, 3 Hann segments of 256 at 50% overlap),
# estimated from 10^4 epochs with scipy's estimator before this suite was
# written. Per-epoch std of the bin-mean is 0.022.
NOISE_COHERENCE_BASELINE = 0.5395


def test_default_welch_segmentation():
    spec = WelchSpec()
    assert spec.n_segments(512) == 3
    assert spec.hop == 128


def test_too_short_for_two_segments():
    with pytest.raises(TooShort):
        welch_spectra(np.zeros(256), np.zeros(256), WelchSpec())


def test_self_spectrum_exact():
    x = np.random.default_rng(0).standard_normal(512)
    sp = welch_spectra(x, x)
    assert np.array_equal(sp.sxy, sp.sxx)
    coh = coherence(sp.sxx, sp.syy, sp.sxy)
    powered = np.real(sp.sxx) > 1e-30
    assert np.max(np.abs(coh[powered] - 1.0)) < 1e-9
    peak = np.argmax(np.real(welch_spectra(np.sin(2 * np.pi * 10 *
                     np.arange(512) / FS), x * 0 + np.sin(2 * np.pi * 10 *
                     np.arange(512) / FS)).sxx))
    assert peak == 10  # 1 Hz bins put a 10 Hz tone in bin 10


def test_matches_scipy_coherence():
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(512)
        y = 0.4 * x + rng.standard_normal(512)
        sp = welch_spectra(x, y)
        ours = coherence(sp.sxx, sp.syy, sp.sxy)
        _, ref = sps.coherence(x, y, fs=FS, nperseg=256, noverlap=128,
                               window="hann", detrend="constant")
        np.testing.assert_allclose(ours, np.sqrt(ref), atol=1e-12)


def test_delay_phase_exact_on_integer_bin_tones():
    # tones on integer bins leak nowhere under the periodic Hann window, so
    # the cross-spectrum phase of a 4-sample delay is exact
    n, d = 512, 4
    t = np.arange(n + d)
    z = sum(np.cos(2 * np.pi * f * t / FS + p) for f, p in ((10, 0.3), (20, 1.2), (40, 2.4)))
    x, y = z[d:], z[:n]  # y[k] = x[k - d]
    sp = welch_spectra(x, y)
    for f in (10, 20, 40):
        expected = 2 * np.pi * f * d / FS  # sign per Sxy = X * conj(Y), y lagging
        err = np.angle(sp.sxy[f] * np.exp(-1j * expected))
        assert abs(err) < 1e-6
        assert abs(np.abs(sp.sxy[f]) / np.real(sp.sxx[f]) - 1.0) < 1e-6


def test_delay_phase_white_noise():
    rng = np.random.default_rng(2)
    z = rng.standard_normal(520)
    x, y = z[4:516], z[:512]
    sp = welch_spectra(x, y)
    for f in (10, 20, 40):
        expected = 2 * np.pi * f * 4 / FS
        err = np.angle(sp.sxy[f] * np.exp(-1j * expected))
        assert abs(err) < 0.15
        assert abs(np.abs(sp.sxy[f]) / np.real(sp.sxx[f]) - 1.0) < 0.2


def test_independent_noise_baseline():
    rng = np.random.default_rng(3)
    means = []
    for _ in range(300):
        sp = welch_spectra(rng.standard_normal(512), rng.standard_normal(512))
        means.append(coherence(sp.sxx, sp.syy, sp.sxy).mean())
    assert abs(np.mean(means) - NOISE_COHERENCE_BASELINE) < 0.05


def test_shared_tone_with_weak_noise():
    rng = np.random.default_rng(4)
    vals = []
    for _ in range(100):
        x = np.sin(2 * np.pi * 9.0 * np.arange(512) / FS + rng.uniform(0, 2 * np.pi))
        y = x + rng.standard_normal(512) / 10.0
        sp = welch_spectra(x, y)
        vals.append(coherence(sp.sxx, sp.syy, sp.sxy)[9])
    assert np.mean(vals) > 0.9


def test_feature_vector_lengths():
    bands = default_bands()
    assert len(feature_index(ELECTRODE_SUBSET, bands)) == 468  # C(13,2) * 6
    assert len(feature_index(MONTAGE, bands)) == 1140  # C(20,2) * 6


def test_planted_component_dominates():
    rng = np.random.default_rng(5)
    bands = default_bands()
    idx = feature_index(ELECTRODE_SUBSET, bands)
    target = idx.index(("Pz", "O2", "low_alpha"))
    x = rng.normal(0, 10, (20, 512))
    tone = 40.0 * np.sin(2 * np.pi * 9.0 * np.arange(512) / FS + 0.7)
    x[MONTAGE.index("Pz")] += tone
    x[MONTAGE.index("O2")] += tone
    ep = Epoch("s", MONTAGE, x.astype(np.float32), 0)
    fv = extract_features(ep, ELECTRODE_SUBSET, bands)
    assert fv.index == idx
    assert fv.values[target] > 0.9
    assert np.argmax(fv.values) == target


def test_features_bounded_and_deterministic():
    rng = np.random.default_rng(6)
    x = rng.normal(0, 10, (3, 20, 512)).astype(np.float32)
    bands = default_bands()
    a = extract_features_batch(x, MONTAGE, ELECTRODE_SUBSET, bands)
    b = extract_features_batch(x, MONTAGE, ELECTRODE_SUBSET, bands)
    assert np.array_equal(a, b)
    assert np.all(a >= 0.0) and np.all(a <= 1.0)


def test_coherence_symmetry_and_scale_invariance():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(512)
    y = 0.3 * x + rng.standard_normal(512)
    sp_xy = welch_spectra(x, y)
    sp_yx = welch_spectra(y, x)
    assert np.array_equal(coherence(sp_xy.sxx, sp_xy.syy, sp_xy.sxy),
                          coherence(sp_yx.sxx, sp_yx.syy, sp_yx.sxy))
    sp_scaled = welch_spectra(37.5 * x, y)
    base = coherence(sp_xy.sxx, sp_xy.syy, sp_xy.sxy)
    scaled = coherence(sp_scaled.sxx, sp_scaled.syy, sp_scaled.sxy)
    assert np.max(np.abs(base - scaled)) < 1e-9


def test_missing_electrode():
    rng = np.random.default_rng(8)
    labels = MONTAGE[:10]
    ep = Epoch("s", labels, rng.normal(0, 10, (10, 512)).astype(np.float32), 0)
    with pytest.raises(MissingElectrode):
        extract_features(ep, ELECTRODE_SUBSET, default_bands())


def test_zero_signal_gives_zero_coherence():
    z = np.zeros(512)
    sp = welch_spectra(z, z)
    assert np.all(coherence(sp.sxx, sp.syy, sp.sxy) == 0.0)
