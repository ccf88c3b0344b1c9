"""Deterministic seed derivation.

Every source of randomness in the package flows from an explicit 64-bit
seed. Sub-seeds are derived by hashing the parent seed together with a
string/integer path, so results never depend on scheduling or call order.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *path: int | str) -> int:
    """Derive a child seed from `seed` and a path of labels.

    Stable across platforms and processes: the derivation is a SHA-256
    of the canonical byte encoding of (seed, *path).
    """
    h = hashlib.sha256()
    h.update(int(seed & MASK64).to_bytes(8, "little"))
    for part in path:
        if isinstance(part, str):
            data = part.encode("utf-8")
            h.update(b"s" + len(data).to_bytes(4, "little") + data)
        else:
            h.update(b"i" + int(part & MASK64).to_bytes(8, "little"))
    return int.from_bytes(h.digest()[:8], "little")


def rng_from(seed: int, *path: int | str) -> np.random.Generator:
    """A fresh PCG64 generator seeded by `derive_seed(seed, *path)`."""
    return np.random.default_rng(derive_seed(seed, *path))
