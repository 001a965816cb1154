import numpy as np
import pytest

from eegtask.montage import MONTAGE
from eegtask.spectral import default_bands, feature_index
from eegtask.synth import SynthConfig, synth_generate


@pytest.fixture(scope="session")
def small_cohort():
    """9 subjects (5 experts), 12 epochs per class per subject."""
    cfg = SynthConfig(n_subjects=9, epochs_per_class_per_subject=12,
                      snr=3.0, n_experts=5, seed=7)
    return cfg, synth_generate(cfg)


def planted_feature_positions(cfg, electrodes, bands=None):
    bands = bands if bands is not None else default_bands()
    index = feature_index(electrodes, bands)
    positions = {}
    for cls, (el_a, el_b, band_name) in cfg.planted.items():
        a, b = sorted((el_a, el_b), key=MONTAGE.index)
        positions[cls] = index.index((a, b, band_name))
    return positions


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240810)
