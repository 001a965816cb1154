"""Band-pass filtering, epoching into 2-second windows, artifact rejection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import BandOutOfRange, NoEvents, TooShort, UnstableFilter
from .formats import Recording

EPOCH_SAMPLES = 512  # 2 s at 256 Hz
EPOCH_SAMPLE_RATE = 256


@dataclass
class FilterSpec:
    low_hz: float = 0.1
    high_hz: float = 70.0
    order: int = 4
    zero_phase: bool = True


@dataclass
class Epoch:
    """One 2-second window of multichannel EEG with a single difficulty label."""

    subject_id: str
    channel_labels: tuple
    samples: np.ndarray  # float32 [n_channels, 512]
    difficulty: int

    def __post_init__(self):
        self.channel_labels = tuple(self.channel_labels)
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        if self.samples.shape[1] != EPOCH_SAMPLES:
            raise ValueError(f"epoch must hold exactly {EPOCH_SAMPLES} samples per channel")
        if self.samples.shape[0] != len(self.channel_labels):
            raise ValueError("channel count does not match label count")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("epoch contains non-finite samples")
        if self.difficulty not in (0, 1, 2):
            raise ValueError(f"difficulty must be 0, 1 or 2, got {self.difficulty}")


def design_bandpass(spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """Butterworth band-pass in second-order sections; rejects unstable designs."""
    nyq = sample_rate_hz / 2.0
    if not (0.0 < spec.low_hz < spec.high_hz < nyq):
        raise BandOutOfRange(
            f"band [{spec.low_hz}, {spec.high_hz}] Hz invalid for Nyquist {nyq} Hz"
        )
    if spec.order < 1:
        raise ValueError("filter order must be >= 1")
    sos = signal.butter(spec.order, [spec.low_hz / nyq, spec.high_hz / nyq],
                        btype="bandpass", output="sos")
    for section in sos:
        poles = np.roots(np.array([1.0, section[4], section[5]]))
        if np.any(np.abs(poles) >= 1.0):
            raise UnstableFilter(
                f"designed filter has pole magnitude {np.abs(poles).max():.8f} >= 1"
            )
    return sos


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    # even reflection about the end samples (end sample not repeated)
    return np.concatenate([x[..., pad:0:-1], x, x[..., -2:-pad - 2:-1]], axis=-1)


def _forward_backward(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = signal.sosfilt(sos, x, axis=-1)
    y = signal.sosfilt(sos, y[..., ::-1], axis=-1)
    return y[..., ::-1]


def filter_array(x: np.ndarray, spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """Filter along the last axis; length preserved.

    The per-channel mean is removed first (a band-pass has zero DC gain)
    and the signal is reflection-padded by 3x order samples at each end.
    Zero-phase mode runs the filter forward then backward and averages
    with the time-reversed application, so the result commutes exactly
    with time reversal.
    """
    sos = design_bandpass(spec, sample_rate_hz)
    x = np.asarray(x, dtype=np.float64)
    pad = 3 * spec.order
    if x.shape[-1] <= pad:
        raise TooShort(f"need more than {pad} samples, got {x.shape[-1]}")
    x = x - x.mean(axis=-1, keepdims=True)
    ext = _reflect_pad(x, pad)
    n = ext.shape[-1]
    if not spec.zero_phase:
        return signal.sosfilt(sos, ext, axis=-1)[..., pad:n - pad]
    fwd = _forward_backward(sos, ext)
    rev = _forward_backward(sos, ext[..., ::-1])[..., ::-1]
    return (0.5 * (fwd + rev))[..., pad:n - pad]


def bandpass_filter(rec: Recording, spec: FilterSpec = FilterSpec()) -> Recording:
    """Filter each channel of a recording independently."""
    filtered = filter_array(rec.samples, spec, rec.sample_rate_hz)
    return Recording(
        subject_id=rec.subject_id,
        sample_rate_hz=rec.sample_rate_hz,
        channel_labels=rec.channel_labels,
        samples=filtered.astype(np.float32),
        events=list(rec.events),
        mot_score=rec.mot_score,
        vs_score=rec.vs_score,
    )


def epoch_signal(rec: Recording) -> list:
    """Partition each labeled event into non-overlapping 512-sample epochs.

    Trailing samples shorter than one window are discarded. Epochs inherit
    the event's difficulty and the recording's subject id, in onset order.
    """
    if rec.sample_rate_hz != EPOCH_SAMPLE_RATE:
        raise ValueError(f"epoching requires {EPOCH_SAMPLE_RATE} Hz recordings")
    if not rec.events:
        raise NoEvents(f"recording {rec.subject_id!r} has no labeled events")
    epochs = []
    for ev in sorted(rec.events, key=lambda e: e.onset):
        n_windows = (ev.offset - ev.onset) // EPOCH_SAMPLES
        for k in range(n_windows):
            start = ev.onset + k * EPOCH_SAMPLES
            epochs.append(Epoch(
                subject_id=rec.subject_id,
                channel_labels=rec.channel_labels,
                samples=rec.samples[:, start:start + EPOCH_SAMPLES].copy(),
                difficulty=ev.difficulty,
            ))
    return epochs


def reject_artifacts(epochs, ptp_threshold_uv: float = 200.0):
    """Drop epochs where any channel's peak-to-peak amplitude exceeds the threshold.

    Returns (kept, dropped_count); kept preserves input order.
    """
    if ptp_threshold_uv <= 0:
        raise ValueError("peak-to-peak threshold must be positive")
    kept = []
    dropped = 0
    for ep in epochs:
        ptp = ep.samples.max(axis=1) - ep.samples.min(axis=1)
        if np.any(ptp > ptp_threshold_uv):
            dropped += 1
        else:
            kept.append(ep)
    return kept, dropped
