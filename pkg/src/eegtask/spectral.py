"""Welch spectra and magnitude coherence, aggregated into per-epoch features.

Coherence of channels x and y at frequency f:

    coh(f) = |E[Sxy(f)]| / sqrt(E[Sxx(f)] * E[Syy(f)])

where the expectation is estimated by averaging windowed segment
periodograms (Welch's method). With a single segment the magnitude is
identically 1 for any pair, so at least two segments are required.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingElectrode, TooShort
from .montage import MONTAGE_INDEX

SPECTRUM_FLOOR = 1e-30


@dataclass
class BandSpec:
    name: str
    lo_hz: float
    hi_hz: float

    def __post_init__(self):
        if not self.lo_hz < self.hi_hz:
            raise ValueError(f"band {self.name!r}: need lo < hi, got [{self.lo_hz}, {self.hi_hz})")

    def label(self) -> str:
        return f"{self.lo_hz:g}-{self.hi_hz:g} Hz"


def default_bands():
    """Six half-open bands [lo, hi); every edge maps to a whole 1 Hz bin."""
    return [
        BandSpec("delta", 4.0, 8.0),
        BandSpec("low_alpha", 8.0, 10.0),
        BandSpec("high_alpha", 11.0, 13.0),
        BandSpec("low_beta", 14.0, 22.0),
        BandSpec("high_beta", 23.0, 35.0),
        BandSpec("gamma", 36.0, 44.0),
    ]


@dataclass
class WelchSpec:
    segment_len: int = 256
    overlap: float = 0.5
    window: str = "hann"

    def __post_init__(self):
        if self.window != "hann":
            raise ValueError(f"unsupported window {self.window!r}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must lie in [0, 1)")
        if self.segment_len < 2:
            raise ValueError("segment_len must be >= 2")

    @property
    def hop(self) -> int:
        return max(1, int(round(self.segment_len * (1.0 - self.overlap))))

    def n_segments(self, n_samples: int) -> int:
        if n_samples < self.segment_len:
            return 0
        return (n_samples - self.segment_len) // self.hop + 1


def hann_window(n: int) -> np.ndarray:
    # periodic Hann; its DFT is zero beyond the +-1 neighbouring bins
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass
class Spectra:
    freqs: np.ndarray
    sxx: np.ndarray  # complex, zero imaginary part
    syy: np.ndarray
    sxy: np.ndarray


def segment_ffts(x: np.ndarray, spec: WelchSpec) -> np.ndarray:
    """Windowed segment DFTs along the last axis: [..., n_segments, n_bins].

    Each segment is mean-removed (constant detrend) and multiplied by a
    periodic Hann window before the real FFT.
    """
    n = x.shape[-1]
    n_seg = spec.n_segments(n)
    if n_seg < 2:
        raise TooShort(
            f"{n} samples yield {n_seg} Welch segment(s) of {spec.segment_len}; need at least 2"
        )
    starts = [k * spec.hop for k in range(n_seg)]
    segs = np.stack([x[..., s:s + spec.segment_len] for s in starts], axis=-2)
    segs = segs - segs.mean(axis=-1, keepdims=True)
    return np.fft.rfft(segs * hann_window(spec.segment_len), axis=-1)


def welch_spectra(x: np.ndarray, y: np.ndarray, spec: WelchSpec = WelchSpec(),
                  sample_rate_hz: float = 256.0) -> Spectra:
    """Segment-averaged auto- and cross-spectra of two equal-length signals.

    S_ab(f) = mean over segments of A(f) * conj(B(f)); bin spacing is
    sample_rate / segment_len (1 Hz at the defaults).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    fx = segment_ffts(x, spec)
    fy = segment_ffts(y, spec)
    freqs = np.fft.rfftfreq(spec.segment_len, 1.0 / sample_rate_hz)
    return Spectra(
        freqs=freqs,
        sxx=np.mean(fx * np.conj(fx), axis=0),
        syy=np.mean(fy * np.conj(fy), axis=0),
        sxy=np.mean(fx * np.conj(fy), axis=0),
    )


def coherence(sxx: np.ndarray, syy: np.ndarray, sxy: np.ndarray) -> np.ndarray:
    """Magnitude coherence per bin, in [0, 1]; near-zero-power bins give 0."""
    pxx = np.real(sxx)
    pyy = np.real(syy)
    ok = (pxx > SPECTRUM_FLOOR) & (pyy > SPECTRUM_FLOOR)
    out = np.zeros(np.broadcast(pxx, pyy).shape)
    np.divide(np.abs(sxy), np.sqrt(pxx * pyy), out=out, where=ok)
    return np.minimum(out, 1.0)


@dataclass
class FeatureVector:
    """Coherence values indexed by (electrode pair, band), in a fixed order."""

    values: np.ndarray
    index: list  # [(channel_a, channel_b, band_name)]


def subset_pairs(electrodes):
    """Unordered electrode pairs (a, b) with a before b in montage order."""
    ordered = sorted(electrodes, key=MONTAGE_INDEX.__getitem__)
    return [(a, b) for i, a in enumerate(ordered) for b in ordered[i + 1:]]


def feature_index(electrodes, bands):
    return [(a, b, band.name) for a, b in subset_pairs(electrodes) for band in bands]


def feature_names(electrodes, bands):
    return [f"{a}-{b}:{band}" for a, b, band in feature_index(electrodes, bands)]


def _band_matrix(bands, freqs):
    rows = []
    for band in bands:
        mask = (freqs >= band.lo_hz) & (freqs < band.hi_hz)
        count = int(mask.sum())
        if count == 0:
            raise ValueError(f"band {band.name!r} covers no frequency bins")
        rows.append(mask / count)
    return np.array(rows)


def extract_features_batch(samples: np.ndarray, channel_labels, electrodes, bands,
                           spec: WelchSpec = WelchSpec(),
                           sample_rate_hz: float = 256.0) -> np.ndarray:
    """Feature matrix [n_epochs, n_pairs * n_bands] for a stack of epochs.

    samples is [n_epochs, n_channels, n_samples]. Each feature is the mean
    coherence over the band's bins for one electrode pair, ordered
    lexicographically by (pair, band) as given by feature_index().
    """
    labels = list(channel_labels)
    for el in electrodes:
        if el not in labels:
            raise MissingElectrode(f"electrode {el!r} not present in epoch montage")
    ordered = sorted(electrodes, key=MONTAGE_INDEX.__getitem__)
    rows = np.array([labels.index(el) for el in ordered])
    n_el = len(ordered)
    ia, ib = np.triu_indices(n_el, k=1)

    ffts = segment_ffts(np.asarray(samples, dtype=np.float64)[:, rows, :], spec)
    auto = np.mean(ffts * np.conj(ffts), axis=2).real  # [N, n_el, bins]
    sxy = np.mean(ffts[:, ia] * np.conj(ffts[:, ib]), axis=2)  # [N, pairs, bins]
    pxx = auto[:, ia]
    pyy = auto[:, ib]
    ok = (pxx > SPECTRUM_FLOOR) & (pyy > SPECTRUM_FLOOR)
    coh = np.zeros(sxy.shape)
    np.divide(np.abs(sxy), np.sqrt(pxx * pyy), out=coh, where=ok)
    coh = np.minimum(coh, 1.0)

    freqs = np.fft.rfftfreq(spec.segment_len, 1.0 / sample_rate_hz)
    bm = _band_matrix(bands, freqs)
    feats = coh @ bm.T  # [N, pairs, bands]
    return feats.reshape(samples.shape[0], -1)


def extract_features(epoch, electrodes, bands, spec: WelchSpec = WelchSpec()) -> FeatureVector:
    """Coherence features of one epoch over the electrode subset and bands."""
    values = extract_features_batch(
        epoch.samples[None, :, :], epoch.channel_labels, electrodes, bands, spec,
        sample_rate_hz=256.0,
    )[0]
    return FeatureVector(values=values, index=feature_index(electrodes, bands))
