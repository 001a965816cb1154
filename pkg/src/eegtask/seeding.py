"""Deterministic seed derivation: one global seed reproduces every stage.

Each consumer derives its generator from the global seed plus a list of
string/integer parts (stage name, repeat index, ...) hashed with SHA-256,
so adding a stage never perturbs the randomness of existing ones.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, *parts) -> int:
    text = str(int(seed)) + "".join(f"/{p}" for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *parts))
