"""The 10-20 electrode montage used by the recording headset."""

# Sensor order is fixed; it defines the row order of every sample matrix
# and the canonical ordering of electrode pairs.
MONTAGE = (
    "O1", "O2", "P4", "POz", "P3", "Pz", "Cz", "C3", "C4", "Fz",
    "F3", "F4", "T6", "T4", "F8", "Fp1", "Fp2", "F7", "T5", "T3",
)

MONTAGE_INDEX = {name: i for i, name in enumerate(MONTAGE)}

# Frontal / parietal / motor / occipital subset used for coherence features.
ELECTRODE_SUBSET = (
    "T4", "T3", "O1", "P3", "Pz", "F3", "Fz", "F4", "C4", "P4", "C3", "Cz", "O2",
)


def montage_order(labels):
    """Sort channel labels by their montage index."""
    return tuple(sorted(labels, key=MONTAGE_INDEX.__getitem__))
