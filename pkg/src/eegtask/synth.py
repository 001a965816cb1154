"""Synthetic cohort generator with analytically known coherence structure.

Every channel of every epoch is independent band-limited Gaussian noise
(1-45 Hz, 10 uV standard deviation). For an epoch of class c, the two
channels of the planted (pair, band) for c additionally share one
sinusoid at the band's center frequency with a fresh random phase per
epoch and amplitude snr * 10 uV. Coherence is therefore high in exactly
one (pair, band) per class, which makes the whole pipeline checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import EPOCH_SAMPLE_RATE, EPOCH_SAMPLES
from .errors import InvalidPlantTarget
from .formats import Event, Recording
from .montage import MONTAGE
from .seeding import derive_rng
from .spectral import BandSpec, default_bands

NOISE_SIGMA_UV = 10.0
NOISE_BAND = (1.0, 45.0)


def default_planted_map():
    return {
        0: ("Pz", "O2", "low_alpha"),
        1: ("F3", "C3", "low_beta"),
        2: ("O1", "P4", "gamma"),
    }


@dataclass
class SynthConfig:
    n_subjects: int = 6
    epochs_per_class_per_subject: int = 60
    snr: float = 3.0
    planted: dict = field(default_factory=default_planted_map)
    n_experts: int | None = None  # defaults to ceil(n_subjects / 2)
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 1 or self.epochs_per_class_per_subject < 1:
            raise ValueError("cohort and epoch counts must be positive")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.n_experts is None:
            self.n_experts = (self.n_subjects + 1) // 2
        if not 0 <= self.n_experts <= self.n_subjects:
            raise ValueError("n_experts must lie in [0, n_subjects]")


def resolve_plant_targets(cfg: SynthConfig, bands=None):
    """Map class -> (row_a, row_b, center_hz); validates electrodes and bands."""
    bands = bands if bands is not None else default_bands()
    by_name = {b.name: b for b in bands}
    targets = {}
    for cls in (0, 1, 2):
        if cls not in cfg.planted:
            raise InvalidPlantTarget(f"no planted (pair, band) for class {cls}")
        el_a, el_b, band_name = cfg.planted[cls]
        for el in (el_a, el_b):
            if el not in MONTAGE:
                raise InvalidPlantTarget(f"planted electrode {el!r} not in montage")
        if el_a == el_b:
            raise InvalidPlantTarget("planted pair must use two distinct electrodes")
        if band_name not in by_name:
            raise InvalidPlantTarget(f"planted band {band_name!r} unknown")
        band: BandSpec = by_name[band_name]
        targets[cls] = (MONTAGE.index(el_a), MONTAGE.index(el_b),
                        (band.lo_hz + band.hi_hz) / 2.0)
    return targets


def band_limited_noise(rng: np.random.Generator, shape, sigma=NOISE_SIGMA_UV,
                       lo_hz=NOISE_BAND[0], hi_hz=NOISE_BAND[1],
                       n_samples=EPOCH_SAMPLES, sample_rate=EPOCH_SAMPLE_RATE):
    """Gaussian noise with spectral support limited to [lo_hz, hi_hz], exact sigma."""
    white = rng.standard_normal(tuple(shape) + (n_samples,))
    spec = np.fft.rfft(white, axis=-1)
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate)
    spec[..., (freqs < lo_hz) | (freqs > hi_hz)] = 0.0
    out = np.fft.irfft(spec, n_samples, axis=-1)
    return out * (sigma / out.std(axis=-1, keepdims=True))


def synth_generate(cfg: SynthConfig, bands=None) -> list:
    """One recording per subject with three consecutive labeled segments."""
    targets = resolve_plant_targets(cfg, bands)
    per = cfg.epochs_per_class_per_subject
    seg_len = per * EPOCH_SAMPLES
    n_channels = len(MONTAGE)
    t = np.arange(EPOCH_SAMPLES) / EPOCH_SAMPLE_RATE
    width = max(2, len(str(cfg.n_subjects)))
    recordings = []
    for subject in range(cfg.n_subjects):
        rng = derive_rng(cfg.seed, "synth", subject)
        samples = np.empty((n_channels, 3 * seg_len), dtype=np.float64)
        events = []
        for cls in (0, 1, 2):
            row_a, row_b, center_hz = targets[cls]
            noise = band_limited_noise(rng, (per, n_channels))  # [per, C, 512]
            phases = rng.uniform(0.0, 2.0 * np.pi, size=per)
            shared = cfg.snr * NOISE_SIGMA_UV * np.sin(
                2.0 * np.pi * center_hz * t[None, :] + phases[:, None])
            noise[:, row_a, :] += shared
            noise[:, row_b, :] += shared
            start = cls * seg_len
            samples[:, start:start + seg_len] = noise.transpose(1, 0, 2).reshape(n_channels, seg_len)
            events.append(Event(onset=start, offset=start + seg_len, difficulty=cls))
        expert = subject < cfg.n_experts
        score_rng = derive_rng(cfg.seed, "scores", subject)
        lo, hi = (0.55, 0.95) if expert else (0.05, 0.45)
        recordings.append(Recording(
            subject_id=f"s{subject + 1:0{width}d}",
            sample_rate_hz=EPOCH_SAMPLE_RATE,
            channel_labels=MONTAGE,
            samples=samples.astype(np.float32),
            events=events,
            mot_score=float(score_rng.uniform(lo, hi)),
            vs_score=float(score_rng.uniform(lo, hi)),
        ))
    return recordings
